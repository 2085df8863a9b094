#pragma once

#include <optional>
#include <string_view>

namespace pdsim {

enum class ModelKind { ss, pd };
enum class FilterKind { kf, ekf, ukf };

constexpr std::string_view to_string(ModelKind k)
{
    return k == ModelKind::ss ? "ss" : "pd";
}

constexpr std::string_view to_string(FilterKind k)
{
    switch (k) {
    case FilterKind::kf: return "kf";
    case FilterKind::ekf: return "ekf";
    case FilterKind::ukf: return "ukf";
    }
    return "kf";
}

std::optional<ModelKind> parse_model_kind(std::string_view s);
std::optional<FilterKind> parse_filter_kind(std::string_view s);

/// KF pairs with SS; EKF and UKF pair with PD.
constexpr bool filter_matches_model(ModelKind model, FilterKind filter)
{
    return model == ModelKind::ss ? filter == FilterKind::kf : filter != FilterKind::kf;
}

} // namespace pdsim
