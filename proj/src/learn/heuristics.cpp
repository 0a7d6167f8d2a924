#include "adherence/learn/heuristics.hpp"

#include <algorithm>

namespace adherence::learn {

std::string_view to_string(Heuristic h) {
  switch (h) {
    case Heuristic::LwMisses: return "lw_misses";
    case Heuristic::TMisses: return "t_misses";
    case Heuristic::LwManual: return "lw_manual";
  }
  return "?";
}

Heuristic parse_heuristic(std::string_view text) {
  for (Heuristic h : {Heuristic::LwMisses, Heuristic::TMisses, Heuristic::LwManual}) {
    if (text == to_string(h)) return h;
  }
  throw InvalidInput("unknown heuristic '" + std::string(text) + "'");
}

int heuristic_score(Heuristic kind, const tasks::TaskSample& sample) {
  const int k = sample.k();
  if (k == 0) throw InvalidInput("heuristic needs a non-empty input sequence");
  const int first = std::max(0, k - 7);
  int score = 0;
  switch (kind) {
    case Heuristic::LwMisses:
      for (int d = first; d < k; ++d) score += sample.call_seq[d] == 0 ? 1 : 0;
      break;
    case Heuristic::TMisses:
      for (int d = 0; d < k; ++d) score += sample.call_seq[d] == 0 ? 1 : 0;
      break;
    case Heuristic::LwManual:
      if (static_cast<int>(sample.manual_seq.size()) != k) {
        throw InvalidInput("lw_manual needs the manual-dose sequence");
      }
      for (int d = first; d < k; ++d) score += sample.manual_seq[d];
      break;
  }
  return score;
}

std::vector<double> heuristic_scores(Heuristic kind, const std::vector<tasks::TaskSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(heuristic_score(kind, s));
  return out;
}

}  // namespace adherence::learn
