// Command-line front end: figure reproduction, filter validation, reduction
// fuzzing, distances and online-VI bounds.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "bsl/bsl.hpp"

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolation = 2;
constexpr int kExitNumerical = 3;

bsl::Gaussian1D parse_gaussian(const std::string& text) {
  const std::string prefix = "gaussian:";
  if (text.rfind(prefix, 0) != 0) bsl::fail(bsl::ErrorKind::InvalidArgument, "expected gaussian:M,V");
  const auto body = text.substr(prefix.size());
  const auto comma = body.find(',');
  if (comma == std::string::npos) bsl::fail(bsl::ErrorKind::InvalidArgument, "expected gaussian:M,V");
  try {
    bsl::Gaussian1D g{std::stod(body.substr(0, comma)), std::stod(body.substr(comma + 1))};
    g.validate();
    return g;
  } catch (const std::logic_error&) {
    bsl::fail(bsl::ErrorKind::InvalidArgument, "cannot parse " + text);
  }
}

std::size_t emit_record(const bsl::RunRecord& r, const std::string& dir) {
  for (auto fmt : {bsl::EmitFormat::CSV, bsl::EmitFormat::SVG})
    for (const auto& p : bsl::emit_per_metric(r, fmt, dir)) std::cout << "wrote " << p.string() << "\n";
  return r.violations();
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) bsl::fail(bsl::ErrorKind::IOFailure, "cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    bsl::fail(bsl::ErrorKind::InvalidArgument, std::string("bad config: ") + e.what());
  }
}

bsl::Metric parse_metric(const std::string& s) {
  static const std::map<std::string, bsl::Metric> m{
      {"tv", bsl::Metric::TV}, {"hellinger", bsl::Metric::Hellinger}, {"w1", bsl::Metric::W1}};
  auto it = m.find(s);
  if (it == m.end()) bsl::fail(bsl::ErrorKind::InvalidArgument, "unknown metric " + s);
  return it->second;
}

int cmd_reproduce(int which, std::size_t steps, std::uint64_t seed, const std::string& out) {
  const auto r = bsl::reproduce(which, steps, seed);
  const auto bad = emit_record(r.record, out);
  json meta{{"case", which}, {"seed", seed}, {"steps", steps}, {"y", r.y}, {"x_star", r.x_star},
            {"prior_a", {r.prior_a.mean, r.prior_a.variance}}, {"prior_b", {r.prior_b.mean, r.prior_b.variance}},
            {"violations", bad}};
  bsl::write_text(std::filesystem::path(out) / (r.record.name + "_meta.json"), meta.dump(2) + "\n");
  std::cout << "violations " << bad << "\n";
  return bad ? kExitViolation : kExitOk;
}

int cmd_bound_validate(bsl::FilterKind f, std::size_t steps, std::uint64_t seed, const std::string& out) {
  const auto r = bsl::bound_validate(f, steps, seed);
  const auto bad = emit_record(r.set1, out) + emit_record(r.set2, out);
  std::cout << "violations " << bad << "\n";
  return bad ? kExitViolation : kExitOk;
}

int cmd_fuzz(bsl::FuzzTheorem t, std::size_t trials, std::uint64_t seed, std::size_t threads) {
  const auto s = bsl::reduction_fuzz(t, trials, seed, threads);
  json j{{"theorem", bsl::to_string(t)}, {"attempted", s.attempted}, {"evaluated", s.evaluated},
         {"skipped", s.skipped},         {"guaranteed", s.guaranteed}, {"unsound", s.unsound}};
  if (t == bsl::FuzzTheorem::Hellinger) {
    j["guaranteed_er1"] = s.guaranteed_er1;
    j["guaranteed_er2"] = s.guaranteed_er2;
  }
  std::cout << j.dump(2) << "\n";
  return s.unsound ? kExitViolation : kExitOk;
}

int cmd_metric(bsl::Metric m, const std::string& a, const std::string& b, double lower, double upper,
               std::size_t points) {
  const bsl::DomainSpec d{lower, upper, points};
  d.validate();
  const auto rep = bsl::distance(m, parse_gaussian(a), parse_gaussian(b), d);
  std::cout << bsl::format_double(rep.value) << "\n";
  return kExitOk;
}

int cmd_vi_bound(const std::string& path) {
  const auto j = read_json(path);
  bsl::VIBoundInputs in;
  in.r = j.value("r", 1);
  in.det_gamma = j.at("det_gamma").get<double>();
  in.elbo_floors = j.at("elbo_floors").get<std::vector<double>>();
  in.evidences = j.at("evidences").get<std::vector<double>>();
  if (j.contains("d")) in.D = j.at("d").get<double>();
  if (j.contains("D")) in.D = j.at("D").get<double>();
  if (j.contains("beta_inputs"))
    for (const auto& b : j.at("beta_inputs"))
      in.beta_inputs.push_back({b.at("c_vi_tilde").get<double>(), b.at("param_error").get<double>(),
                                b.at("evidence_hat").get<double>()});
  const auto metric = parse_metric(j.value("metric", std::string("tv")));
  const bool type2 = j.value("type", 1) == 2 || !in.beta_inputs.empty();
  const double v = type2 ? bsl::vi_bound_type2(in, metric) : bsl::vi_bound_type1(in, metric);
  std::cout << bsl::format_double(v) << "\n";
  return kExitOk;
}

bsl::ExperimentConfig parse_config(const json& j) {
  static const std::map<std::string, bsl::Experiment> kinds{
      {"reproduce_case1", bsl::Experiment::ReproduceCase1}, {"reproduce_case2", bsl::Experiment::ReproduceCase2},
      {"reproduce_case3", bsl::Experiment::ReproduceCase3}, {"bound_validate", bsl::Experiment::BoundValidate},
      {"reduction_fuzz", bsl::Experiment::ReductionFuzz},   {"vi_demo", bsl::Experiment::VIDemo}};
  bsl::ExperimentConfig c;
  auto it = kinds.find(j.at("experiment").get<std::string>());
  if (it == kinds.end()) bsl::fail(bsl::ErrorKind::InvalidArgument, "unknown experiment");
  c.experiment = it->second;
  c.steps = j.value("steps", c.steps);
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.trials = j.value("trials", c.trials);
  c.threads = j.value("threads", c.threads);
  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    c.domain = bsl::DomainSpec{d.at("lower").get<double>(), d.at("upper").get<double>(),
                               d.at("grid_points").get<std::size_t>()};
  }
  const auto filter = j.value("filter", std::string("gauss-proj"));
  c.filter = filter == "particle" ? bsl::FilterKind::Particle : bsl::FilterKind::GaussProj;
  static const std::map<std::string, bsl::FuzzTheorem> th{{"tv", bsl::FuzzTheorem::TV},
                                                          {"hellinger", bsl::FuzzTheorem::Hellinger},
                                                          {"w1-ip", bsl::FuzzTheorem::W1_IP},
                                                          {"w1-dyn", bsl::FuzzTheorem::W1_DYN}};
  auto t = th.find(j.value("theorem", std::string("tv")));
  if (t == th.end()) bsl::fail(bsl::ErrorKind::InvalidArgument, "unknown theorem");
  c.theorem = t->second;
  c.validate();
  return c;
}

int cmd_run(const std::string& path) {
  const auto c = parse_config(read_json(path));
  switch (c.experiment) {
    case bsl::Experiment::ReproduceCase1:
    case bsl::Experiment::ReproduceCase2:
    case bsl::Experiment::ReproduceCase3: {
      const int which = c.experiment == bsl::Experiment::ReproduceCase1   ? 1
                        : c.experiment == bsl::Experiment::ReproduceCase2 ? 2
                                                                          : 3;
      const auto r = bsl::reproduce(which, c.steps, c.seed, c.domain.value_or(bsl::default_repro_domain()));
      const auto bad = emit_record(r.record, c.output_dir);
      return bad ? kExitViolation : kExitOk;
    }
    case bsl::Experiment::BoundValidate: return cmd_bound_validate(c.filter, c.steps, c.seed, c.output_dir);
    case bsl::Experiment::ReductionFuzz: return cmd_fuzz(c.theorem, c.trials, c.seed, c.threads);
    case bsl::Experiment::VIDemo: {
      const auto r = bsl::vi_demo(c.steps, c.seed);
      return emit_record(r.record, c.output_dir) ? kExitViolation : kExitOk;
    }
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-error bounds for Bayesian sequential learning"};
  app.require_subcommand(1);

  int which = 1;
  std::size_t steps = 20, trials = 1000, threads = 1, points = 8001;
  std::uint64_t seed = 0;
  std::string out = "out", filter = "gauss-proj", theorem = "tv", kind = "tv", a, b, config;
  double lower = -40.0, upper = 40.0;

  auto* rep = app.add_subcommand("reproduce", "Posterior distance vs bound for the two-prior experiment");
  rep->add_option("--case", which, "1, 2 or 3")->required()->check(CLI::IsMember({1, 2, 3}));
  rep->add_option("--steps", steps)->check(CLI::PositiveNumber);
  rep->add_option("--seed", seed);
  rep->add_option("--out", out);

  auto* bv = app.add_subcommand("bound-validate", "Approximate filter vs ledger bounds");
  bv->add_option("--filter", filter)->check(CLI::IsMember({"gauss-proj", "particle"}));
  bv->add_option("--steps", steps)->check(CLI::PositiveNumber);
  bv->add_option("--seed", seed);
  bv->add_option("--out", out);

  auto* fz = app.add_subcommand("reduction-fuzz", "Randomized soundness check of the reduction conditions");
  fz->add_option("--theorem", theorem)->check(CLI::IsMember({"tv", "hellinger", "w1-ip", "w1-dyn"}));
  fz->add_option("--trials", trials)->check(CLI::PositiveNumber);
  fz->add_option("--seed", seed);
  fz->add_option("--threads", threads)->check(CLI::PositiveNumber);

  auto* mt = app.add_subcommand("metric", "Distance between two Gaussians");
  mt->add_option("--kind", kind)->check(CLI::IsMember({"tv", "hellinger", "w1"}));
  mt->add_option("--a", a)->required();
  mt->add_option("--b", b)->required();
  mt->add_option("--lower", lower);
  mt->add_option("--upper", upper);
  mt->add_option("--points", points);

  auto* vi = app.add_subcommand("vi-bound", "Online VI learning-error bound from a JSON file");
  vi->add_option("--config", config)->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  static const std::map<std::string, bsl::FuzzTheorem> th{{"tv", bsl::FuzzTheorem::TV},
                                                          {"hellinger", bsl::FuzzTheorem::Hellinger},
                                                          {"w1-ip", bsl::FuzzTheorem::W1_IP},
                                                          {"w1-dyn", bsl::FuzzTheorem::W1_DYN}};
  try {
    if (*rep) return cmd_reproduce(which, steps, seed, out);
    if (*bv)
      return cmd_bound_validate(filter == "particle" ? bsl::FilterKind::Particle : bsl::FilterKind::GaussProj, steps,
                                seed, out);
    if (*fz) return cmd_fuzz(th.at(theorem), trials, seed, threads);
    if (*mt) return cmd_metric(parse_metric(kind), a, b, lower, upper, points);
    if (*vi) return cmd_vi_bound(config);
    if (*run) return cmd_run(config);
  } catch (const bsl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.numerical() ? kExitNumerical : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
