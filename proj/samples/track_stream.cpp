// Streams a colliding-Gaussians sequence through a Tracker and prints alpha, k and Rand per step.
#include <cstdio>

#include "affect/affect.hpp"

int main() {
  auto cfg = affect::colliding_preset();
  const auto seq = affect::make_sequence(cfg.scenario, 42);

  affect::StepOptions opts;
  opts.iterations = 3;
  affect::Tracker tracker(affect::kmeans_clusterer(2), opts);

  std::printf("t  alpha   k  rand\n");
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto& r = tracker.step(seq[t].w, affect::step_seed(7, static_cast<int>(t)));
    const double alpha = r.alpha_per_iteration.empty() ? 0.0 : r.alpha_per_iteration.back();
    std::printf("%-2zu %.3f   %d  %.3f\n", t, alpha, r.assignment.k(), affect::rand_index(r.assignment, *seq[t].truth));
  }
}
