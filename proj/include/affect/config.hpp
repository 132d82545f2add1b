#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <Eigen/Dense>

#include <charconv>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "affect/experiment.hpp"

namespace affect::config {

namespace pt = boost::property_tree;

namespace detail {

[[noreturn]] inline void fail(const std::string& key, const std::string& what) {
  throw Error(Errc::bad_config, key + ": " + what);
}

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    std::string part = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!part.empty()) out.push_back(std::move(part));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T number(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail(key, "not a number: '" + s + "'");
  return v;
}

inline std::vector<double> numbers(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(number<double>(key, tok));
  return out;
}

inline bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(key, "expected true or false");
}

inline Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// "s" -> s I, or p*p numbers row-major.
inline Eigen::MatrixXd covariance(const std::string& key, const std::string& text, int p) {
  const auto v = numbers(key, text);
  if (v.size() == 1) return v[0] * Eigen::MatrixXd::Identity(p, p);
  if (static_cast<int>(v.size()) != p * p) fail(key, "covariance needs 1 or p*p numbers");
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = v[static_cast<std::size_t>(i * p + j)];
  return m;
}

/// "t: rest" -> (t, rest)
inline std::pair<int, std::string> timed(const std::string& key, const std::string& item) {
  const auto colon = item.find(':');
  if (colon == std::string::npos) fail(key, "expected 't: ...' in '" + item + "'");
  return {number<int>(key, item.substr(0, colon)), trim(item.substr(colon + 1))};
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> get(const std::string& key) {
    if (!tree_) return std::nullopt;
    used_.push_back(key);
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string key(const std::string& k) const { return name_ + "." + k; }

  template <class T>
  void read(const std::string& k, T& out) {
    if (auto v = get(k)) out = number<T>(key(k), *v);
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [k, child] : *tree_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) fail(key(k), "unknown key");
      if (!child.empty()) fail(key(k), "unexpected nesting");
    }
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::vector<std::string> used_;
};

inline void read_gmm(Section s, gen::DynamicGmmConfig& g) {
  s.read("n", g.n);
  s.read("steps", g.steps);
  if (auto v = s.get("means")) {
    g.means.clear();
    for (const auto& m : split(*v, ';')) g.means.push_back(vec(numbers(s.key("means"), m)));
  }
  const int p = g.dim();
  if (auto v = s.get("covariances")) {
    g.covariances.clear();
    for (const auto& c : split(*v, ';')) g.covariances.push_back(covariance(s.key("covariances"), c, p));
    if (g.covariances.size() == 1)
      g.covariances.resize(g.means.size(), g.covariances.front());
  }
  if (auto v = s.get("weights")) g.weights = numbers(s.key("weights"), *v);
  if (auto v = s.get("exact_proportions")) g.exact_proportions = boolean(s.key("exact_proportions"), *v);
  s.read("walk_dimension", g.walk.dimension);
  s.read("walk_step", g.walk.step);
  if (auto v = s.get("drifts")) {
    // "cluster: dx dy @ first-last; ..."
    g.drifts.clear();
    for (const auto& item : split(*v, ';')) {
      const auto [cluster, rest] = timed(s.key("drifts"), item);
      const auto at = rest.find('@');
      if (at == std::string::npos) fail(s.key("drifts"), "expected 'cluster: delta @ first-last'");
      const auto range = split(rest.substr(at + 1), '-');
      if (range.size() != 2) fail(s.key("drifts"), "expected a step range first-last");
      g.drifts.push_back({cluster, vec(numbers(s.key("drifts"), rest.substr(0, at))),
                          number<int>(s.key("drifts"), range[0]), number<int>(s.key("drifts"), range[1])});
    }
  }
  if (auto v = s.get("covariance_events")) {
    // "t: covariance; ..." applied to every component
    g.covariance_events.clear();
    for (const auto& item : split(*v, ';')) {
      const auto [t, rest] = timed(s.key("covariance_events"), item);
      g.covariance_events.push_back({t, -1, covariance(s.key("covariance_events"), rest, p)});
    }
  }
  if (auto v = s.get("proportion_events")) {
    // "t: w1 w2 ...; ..."
    g.proportion_events.clear();
    for (const auto& item : split(*v, ';')) {
      const auto [t, rest] = timed(s.key("proportion_events"), item);
      g.proportion_events.push_back({t, numbers(s.key("proportion_events"), rest)});
    }
  }
  s.check_unknown();
}

inline void read_boids(Section s, BoidsScenario& b) {
  auto& c = b.config;
  if (auto v = s.get("flocks")) {
    c.flock_sizes.clear();
    for (double x : numbers(s.key("flocks"), *v)) c.flock_sizes.push_back(static_cast<int>(x));
  }
  s.read("cube", c.cube);
  s.read("cohesion", c.cohesion);
  s.read("repulsion_radius", c.repulsion_radius);
  s.read("alignment", c.alignment);
  s.read("moves_per_step", c.moves_per_step);
  s.read("switches_per_step", c.switches_per_step);
  s.read("max_speed", c.max_speed);
  s.read("goal_speed", c.goal_speed);
  s.read("goal_pull", c.goal_pull);
  if (auto v = s.get("scatter_at")) {
    if (*v == "none") c.scatter_at.reset();
    else c.scatter_at = number<int>(s.key("scatter_at"), *v);
  }
  s.read("scatter_radius", c.scatter_radius);
  if (auto v = s.get("regroup_at")) {
    if (*v == "none") c.regroup_at.reset();
    else c.regroup_at = number<int>(s.key("regroup_at"), *v);
  }
  s.read("regroup_flocks", c.regroup_flocks);
  if (auto v = s.get("regroup_shuffle")) c.regroup_shuffle = boolean(s.key("regroup_shuffle"), *v);
  s.read("steps", c.steps);
  if (auto v = s.get("proximity")) {
    if (*v == "distance") b.proximity = BoidsProximity::distance;
    else if (*v == "gaussian") b.proximity = BoidsProximity::gaussian;
    else if (*v == "dot") b.proximity = BoidsProximity::dot;
    else fail(s.key("proximity"), "expected distance, gaussian or dot");
  }
  s.read("rho", b.rho);
  s.check_unknown();
}

inline ProximityKind kind_of(const std::string& key, const std::string& v) {
  if (v == "similarity") return ProximityKind::similarity;
  if (v == "dissimilarity") return ProximityKind::dissimilarity;
  fail(key, "expected similarity or dissimilarity");
}

inline void read_clusterer(Section s, ClustererSpec& c) {
  if (auto v = s.get("type")) {
    if (*v == "kmeans") c.kind = ClustererKind::kmeans;
    else if (*v == "hierarchical") c.kind = ClustererKind::hierarchical;
    else if (*v == "spectral") c.kind = ClustererKind::spectral;
    else fail(s.key("type"), "expected kmeans, hierarchical or spectral");
  }
  if (auto v = s.get("linkage")) {
    if (*v == "single") c.linkage = Linkage::single;
    else if (*v == "complete") c.linkage = Linkage::complete;
    else if (*v == "average") c.linkage = Linkage::average;
    else fail(s.key("linkage"), "expected single, complete or average");
  }
  if (auto v = s.get("variant")) {
    if (*v == "aa") c.variant = SpectralVariant::average_association;
    else if (*v == "rc") c.variant = SpectralVariant::ratio_cut;
    else if (*v == "nc") c.variant = SpectralVariant::normalized_cut;
    else fail(s.key("variant"), "expected aa, rc or nc");
  }
  if (auto v = s.get("k")) {
    if (v->rfind("modularity:", 0) == 0) {
      const auto range = split(v->substr(11), '-');
      if (range.size() != 2) fail(s.key("k"), "expected modularity:MIN-MAX");
      c.modularity = true;
      c.k_min = number<int>(s.key("k"), range[0]);
      c.k_max = number<int>(s.key("k"), range[1]);
    } else {
      c.modularity = false;
      c.k = number<int>(s.key("k"), *v);
    }
  }
  s.check_unknown();
}

}  // namespace detail

/// Builds an experiment from INI text. `base_dir` resolves relative csv directories.
/// Grammar and keys are documented in README.md.
inline ExperimentConfig parse(std::istream& in, const std::filesystem::path& base_dir = {}) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::bad_config, std::string("config syntax: ") + e.what());
  }
  for (const auto& [name, child] : tree) {
    static const std::vector<std::string> known{"run", "scenario", "gmm", "boids", "csv", "clusterer", "affect"};
    if (std::find(known.begin(), known.end(), name) == known.end())
      detail::fail(name, child.empty() ? "keys must live in a [section]" : "unknown section");
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return detail::Section(child ? &*child : nullptr, name);
  };

  detail::Section scenario = section("scenario");
  ExperimentConfig c{GmmScenario{}, {}, {}, 1, 0, 1};
  bool have_preset = false;
  if (auto p = scenario.get("preset")) {
    auto base = preset(*p);
    if (!base) detail::fail("scenario.preset", "unknown preset '" + *p + "'");
    c = std::move(*base);
    have_preset = true;
  }
  if (auto type = scenario.get("type")) {
    const bool same = (*type == "gmm" && std::holds_alternative<GmmScenario>(c.scenario)) ||
                      (*type == "boids" && std::holds_alternative<BoidsScenario>(c.scenario)) ||
                      (*type == "csv" && std::holds_alternative<CsvScenario>(c.scenario));
    if (!same || !have_preset) {
      if (*type == "gmm") c.scenario = GmmScenario{};
      else if (*type == "boids") c.scenario = BoidsScenario{};
      else if (*type == "csv") c.scenario = CsvScenario{};
      else detail::fail("scenario.type", "expected gmm, boids or csv");
    }
  } else if (!have_preset) {
    detail::fail("scenario", "needs a preset or a type");
  }
  scenario.check_unknown();

  const bool has_gmm = tree.get_child_optional("gmm").has_value();
  const bool has_boids = tree.get_child_optional("boids").has_value();
  const bool has_csv = tree.get_child_optional("csv").has_value();
  if (has_gmm + has_boids + has_csv > 1) detail::fail("scenario", "exactly one scenario source section is allowed");
  if (auto* g = std::get_if<GmmScenario>(&c.scenario)) {
    if (has_boids || has_csv) detail::fail("scenario", "section does not match the scenario type");
    detail::read_gmm(section("gmm"), g->config);
  } else if (auto* b = std::get_if<BoidsScenario>(&c.scenario)) {
    if (has_gmm || has_csv) detail::fail("scenario", "section does not match the scenario type");
    detail::read_boids(section("boids"), *b);
  } else {
    if (has_gmm || has_boids) detail::fail("scenario", "section does not match the scenario type");
    auto& csv = std::get<CsvScenario>(c.scenario);
    detail::Section s = section("csv");
    if (auto v = s.get("dir")) csv.dir = std::filesystem::path(*v).is_absolute() ? std::filesystem::path(*v) : base_dir / *v;
    if (csv.dir.empty()) detail::fail("csv.dir", "required");
    if (auto v = s.get("kind")) csv.kind = detail::kind_of("csv.kind", *v);
    s.check_unknown();
  }

  detail::read_clusterer(section("clusterer"), c.clusterer);

  detail::Section run = section("run");
  run.read("runs", c.runs);
  run.read("seed", c.seed);
  run.read("threads", c.threads);
  if (auto v = run.get("methods")) {
    c.methods.clear();
    for (const auto& m : detail::split(*v, ',')) {
      try {
        c.methods.push_back(parse_method(m));
      } catch (const Error& e) {
        detail::fail("run.methods", e.what());
      }
    }
  }
  run.check_unknown();

  detail::Section aff = section("affect");
  std::optional<int> iterations;
  if (auto v = aff.get("iterations")) iterations = detail::number<int>("affect.iterations", *v);
  std::optional<InitPolicy> init;
  if (auto v = aff.get("init")) {
    if (*v == "previous") init = InitPolicy::previous;
    else if (*v == "static") init = InitPolicy::static_clustering;
    else detail::fail("affect.init", "expected previous or static");
  }
  aff.check_unknown();
  for (auto& m : c.methods) {
    if (m.kind != MethodKind::affect) continue;
    if (iterations) m.iterations = *iterations;
    if (init) m.init = *init;
  }
  if (iterations && *iterations < 1) detail::fail("affect.iterations", "must be >= 1");

  validate_config(c);
  if (const auto* g = std::get_if<GmmScenario>(&c.scenario)) gen::validate_config(g->config);
  if (const auto* b = std::get_if<BoidsScenario>(&c.scenario)) {
    gen::validate_config(b->config);
    if (b->proximity == BoidsProximity::gaussian && !(b->rho > 0.0)) detail::fail("boids.rho", "must be > 0");
  }
  if (c.clusterer.kind == ClustererKind::hierarchical) {
    const bool dissimilar = std::holds_alternative<BoidsScenario>(c.scenario)
                                ? std::get<BoidsScenario>(c.scenario).proximity == BoidsProximity::distance
                                : std::holds_alternative<CsvScenario>(c.scenario) &&
                                      std::get<CsvScenario>(c.scenario).kind == ProximityKind::dissimilarity;
    if (!dissimilar) detail::fail("clusterer.type", "hierarchical clustering needs dissimilarities");
  } else {
    const bool similar = std::holds_alternative<GmmScenario>(c.scenario) ||
                         (std::holds_alternative<BoidsScenario>(c.scenario) &&
                          std::get<BoidsScenario>(c.scenario).proximity != BoidsProximity::distance) ||
                         (std::holds_alternative<CsvScenario>(c.scenario) &&
                          std::get<CsvScenario>(c.scenario).kind == ProximityKind::similarity);
    if (!similar) detail::fail("clusterer.type", "k-means and spectral clustering need similarities");
  }
  if (!c.clusterer.modularity && c.clusterer.k < 1) detail::fail("clusterer.k", "must be >= 1");
  return c;
}

inline ExperimentConfig load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::bad_config, file.string() + ": cannot open");
  return parse(in, file.parent_path());
}

}  // namespace affect::config
