#pragma once

#include <string_view>
#include <vector>

#include "adherence/tasklab.hpp"

namespace adherence::learn {

enum class Heuristic : std::uint8_t { LwMisses, TMisses, LwManual };

std::string_view to_string(Heuristic h);
Heuristic parse_heuristic(std::string_view text);

/// lw_misses: misses in the last 7 input days; t_misses: misses over the whole
/// input; lw_manual: manual doses in the last 7 input days.
int heuristic_score(Heuristic kind, const tasks::TaskSample& sample);

std::vector<double> heuristic_scores(Heuristic kind, const std::vector<tasks::TaskSample>& samples);

}  // namespace adherence::learn
