// Command-line front end: k sweeps through the scattering engines, eigenphase
// and S-matrix tables, and a consistency-check runner.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vps/helmholtz_vpm.hpp"
#include "vps/maxwell_vpm.hpp"
#include "vps/oracles.hpp"

using namespace vps;
using nlohmann::json;

namespace {

enum class Engine { Scalar, Vector, Maxwell };

struct SourceSpec {
  std::string named;  // empty for generic moment lists
  json params;
  json generic;  // full source-spec object when not named
};

struct RunConfig {
  Engine engine = Engine::Scalar;
  SourceSpec source;
  int truncation = 2;  // lmax or jmax
  int source_lmax = 0;
  std::vector<Complex> k_values;
  double r0 = 0.0;
  double rtol = 1e-9;
  double atol = 1e-12;
  double unitarity_tol = 1e-6;
  double commutator_tol = 1e-5;
  double fitting_tol = 1e-6;
  std::string out_dir = "results";
  bool compare_oracle = false;
  int threads = 0;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Engine parse_engine(const std::string& name) {
  if (name == "scalar") return Engine::Scalar;
  if (name == "vector") return Engine::Vector;
  if (name == "maxwell") return Engine::Maxwell;
  throw CLI::ValidationError("engine must be scalar, vector, or maxwell");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;

  RunConfig cfg;
  cfg.engine = parse_engine(j.value("engine", "scalar"));
  const json& src = j.at("source");
  if (src.contains("named")) {
    cfg.source.named = src.at("named").get<std::string>();
    cfg.source.params = src.value("params", json::object());
  } else {
    cfg.source.generic = src;
  }
  if (j.contains("lmax")) cfg.truncation = j["lmax"].get<int>();
  if (j.contains("jmax")) cfg.truncation = j["jmax"].get<int>();
  cfg.source_lmax = j.value("source_lmax", 0);
  if (j.contains("k")) {
    const json& kj = j["k"];
    if (kj.contains("values")) {
      for (const auto& v : kj["values"])
        cfg.k_values.emplace_back(v.value("re", 0.0), v.value("im", 0.0));
    } else if (kj.contains("num")) {
      const double lo = kj.at("min").get<double>();
      const double hi = kj.at("max").get<double>();
      const int num = kj.at("num").get<int>();
      const bool imag = kj.value("imag", false);
      for (int i = 0; i < num; ++i) {
        const double v = num == 1 ? lo : lo + (hi - lo) * i / (num - 1);
        cfg.k_values.push_back(imag ? Complex(0.0, v) : Complex(v, 0.0));
      }
    } else {
      cfg.k_values.emplace_back(kj.value("re", 0.0), kj.value("im", 0.0));
    }
  }
  cfg.r0 = j.value("r0", 0.0);
  cfg.rtol = j.value("rtol", 1e-9);
  cfg.atol = j.value("atol", 1e-12);
  cfg.unitarity_tol = j.value("unitarity_tol", 1e-6);
  cfg.out_dir = j.value("out", "results");
  return cfg;
}

MultipoleField make_field(const RunConfig& cfg, Complex k) {
  const SourceSpec& s = cfg.source;
  if (s.named.empty()) return field_from_json(s.generic.dump());
  const json& p = s.params;
  if (s.named == "smooth_ball")
    return smooth_ball(p.at("h").get<double>(), p.at("w").get<double>(),
                       p.at("s").get<double>());
  if (s.named == "drude_deformed")
    return drude_deformed(p.at("lambda_p").get<double>(),
                          p.at("sigma_p").get<double>(), p.at("w").get<double>(),
                          p.at("s").get<double>(), k,
                          p.value("alternate_branch", false)
                              ? SqrtBranch::Alternate
                              : SqrtBranch::Principal);
  if (s.named == "square_well")
    return square_well(p.at("v0").get<double>(), p.at("a").get<double>(),
                       p.value("s", 50.0));
  throw std::runtime_error("unknown named source: " + s.named);
}

ChannelBasis make_basis(const RunConfig& cfg) {
  if (cfg.engine == Engine::Scalar)
    return ChannelBasis::make_scalar(cfg.truncation, cfg.source_lmax);
  return ChannelBasis::make_vector(cfg.truncation, cfg.source_lmax);
}

SolveOptions make_options(const RunConfig& cfg) {
  SolveOptions opts;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  opts.r0 = cfg.r0;
  return opts;
}

struct KResult {
  Complex k;
  bool ok = false;
  std::string message;
  ScatteringResult result;
};

std::vector<KResult> sweep(const RunConfig& cfg) {
  const ChannelBasis basis = make_basis(cfg);
  const SolveOptions opts = make_options(cfg);

  // Shared immutable precomputations keyed on the moment pattern.
  const MultipoleField probe = make_field(cfg, cfg.k_values.front());
  std::shared_ptr<const CouplingTensor> tensor;
  std::shared_ptr<const MaxwellOperator> op;
  if (cfg.engine == Engine::Maxwell) {
    op = std::make_shared<const MaxwellOperator>(basis, probe.moment_indices());
  } else {
    tensor = std::make_shared<const CouplingTensor>(
        CouplingTensor::build(basis, basis, probe.moment_indices()));
  }

  std::vector<KResult> results(cfg.k_values.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cfg.k_values.size()) return;
      KResult& out = results[i];
      out.k = cfg.k_values[i];
      try {
        const MultipoleField field = make_field(cfg, out.k);
        if (cfg.engine == Engine::Maxwell) {
          out.result = maxwell_s_matrix(field, op, out.k, opts);
        } else {
          out.result = s_matrix(field, *tensor, out.k, opts);
        }
        out.ok = true;
      } catch (const std::exception& e) {
        out.message = e.what();
      }
    }
  };
  unsigned nthreads = cfg.threads > 0
                          ? static_cast<unsigned>(cfg.threads)
                          : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<unsigned>(nthreads, cfg.k_values.size());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

std::string channel_label(const Channel& c, BasisKind kind) {
  std::ostringstream os;
  if (kind == BasisKind::Vector) os << "j=" << c.j << ",";
  os << "l=" << c.l << ",m=" << c.m;
  return os.str();
}

std::string mode_label(const ScatteringResult& res, Eigen::Index mode) {
  // Dominant component of the eigenvector, for human-readable tagging.
  Eigen::Index imax = 0;
  res.modes.vectors.col(mode).cwiseAbs().maxCoeff(&imax);
  if (!res.S_projected.size())
    return channel_label(res.basis.channel(imax), res.basis.kind());
  const auto labels = transverse_mode_labels(res.basis);
  return labels[imax].label();
}

json matrix_to_json(const ComplexMatrix& m, bool imag_part) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(imag_part ? m(i, j).imag() : m(i, j).real());
    rows.push_back(row);
  }
  return rows;
}

void write_outputs(const RunConfig& cfg, const std::vector<KResult>& results) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  std::ofstream eig(fs::path(cfg.out_dir) / "eigenphases.csv");
  eig << "k_re,k_im,mode,label,eigenphase,eigenvalue_abs\n";
  std::ofstream diag(fs::path(cfg.out_dir) / "diagnostics.csv");
  diag << "k_re,k_im,status,unitarity,projector_commutator,max_condition,"
          "outgoing_steps,regular_steps,message\n";

  json dump;
  dump["engine"] = cfg.engine == Engine::Scalar
                       ? "scalar"
                       : (cfg.engine == Engine::Vector ? "vector" : "maxwell");
  const ChannelBasis basis = make_basis(cfg);
  json chans = json::array();
  for (const Channel& c : basis.channels())
    chans.push_back({{"j", c.j}, {"l", c.l}, {"m", c.m}});
  dump["basis"] = {{"kind", basis.kind() == BasisKind::Scalar ? "scalar" : "vector"},
                   {"truncation", basis.truncation()},
                   {"source_lmax", basis.source_lmax()},
                   {"channels", chans}};
  json runs = json::array();

  for (const KResult& r : results) {
    if (r.ok) {
      const ScatteringResult& res = r.result;
      for (Eigen::Index mode = 0; mode < res.modes.values.size(); ++mode) {
        eig << fmt(r.k.real()) << "," << fmt(r.k.imag()) << "," << mode << ","
            << mode_label(res, mode) << "," << fmt(res.eigenphases[mode]) << ","
            << fmt(std::abs(res.modes.values(mode))) << "\n";
      }
      diag << fmt(r.k.real()) << "," << fmt(r.k.imag()) << ",ok,"
           << fmt(res.diagnostics.unitarity_residual) << ","
           << fmt(res.diagnostics.projector_commutator) << ","
           << fmt(res.diagnostics.max_condition) << ","
           << res.diagnostics.outgoing_steps << ","
           << res.diagnostics.regular_steps << ",\n";
      json run;
      run["k"] = {{"re", r.k.real()}, {"im", r.k.imag()}};
      run["s_re"] = matrix_to_json(res.S, false);
      run["s_im"] = matrix_to_json(res.S, true);
      if (res.S_projected.size()) {
        run["s_projected_re"] = matrix_to_json(res.S_projected, false);
        run["s_projected_im"] = matrix_to_json(res.S_projected, true);
      }
      runs.push_back(run);
    } else {
      diag << fmt(r.k.real()) << "," << fmt(r.k.imag()) << ",error,,,,,,"
           << r.message << "\n";
    }
  }
  dump["results"] = runs;
  std::ofstream(fs::path(cfg.out_dir) / "smatrix.json") << dump.dump(1) << "\n";
}

// Closed-form reference phases for recognized sources; empty if none applies.
std::vector<std::pair<std::string, double>> oracle_phases(const RunConfig& cfg,
                                                          double k) {
  std::vector<std::pair<std::string, double>> out;
  const json& p = cfg.source.params;
  if (cfg.source.named == "square_well" && cfg.engine != Engine::Maxwell) {
    const ChannelBasis basis = make_basis(cfg);
    for (int i = 0; i < basis.dim(); ++i) {
      const int l = basis.orbital_l()[i];
      const Complex s = s_exact_square_well(l, k, p.at("v0").get<double>(),
                                            p.at("a").get<double>());
      out.emplace_back(channel_label(basis.channel(i), basis.kind()),
                       0.5 * std::arg(s));
    }
  } else if (cfg.source.named == "smooth_ball" && cfg.engine == Engine::Maxwell) {
    const double n = std::sqrt(1.0 + p.at("h").get<double>());
    const ChannelBasis basis = make_basis(cfg);
    for (const TransverseMode& m : transverse_mode_labels(basis)) {
      const Complex s = s_exact_dielectric_sphere(
          m.j, m.polarization == 'M' ? 1 : -1, k, n, p.at("w").get<double>());
      out.emplace_back(m.label(), 0.5 * std::arg(s));
    }
  }
  return out;
}

int cmd_run(const RunConfig& cfg) {
  if (cfg.k_values.empty()) {
    std::fprintf(stderr, "error: empty k grid\n");
    return 2;
  }
  const auto results = sweep(cfg);
  write_outputs(cfg, results);

  int failures = 0;
  for (const KResult& r : results) {
    if (!r.ok) {
      ++failures;
      std::printf("k = (%g, %g): error: %s\n", r.k.real(), r.k.imag(),
                  r.message.c_str());
    }
  }

  if (cfg.compare_oracle) {
    namespace fs = std::filesystem;
    std::ofstream cmp(fs::path(cfg.out_dir) / "oracle_comparison.csv");
    cmp << "k_re,k_im,label,engine_phase,oracle_phase,deviation\n";
    double worst = 0.0;
    for (const KResult& r : results) {
      if (!r.ok || r.k.imag() != 0.0) continue;
      const auto oracle = oracle_phases(cfg, r.k.real());
      if (oracle.empty()) continue;
      const ComplexMatrix& s = r.result.S_projected.size()
                                   ? r.result.S_projected
                                   : r.result.S;
      for (size_t i = 0; i < oracle.size(); ++i) {
        const double engine_phase = 0.5 * std::arg(s(i, i));
        double dev = std::abs(engine_phase - oracle[i].second);
        dev = std::min(dev, pi - dev);  // eigenphases live mod pi
        worst = std::max(worst, dev);
        cmp << fmt(r.k.real()) << "," << fmt(r.k.imag()) << ","
            << oracle[i].first << "," << fmt(engine_phase) << ","
            << fmt(oracle[i].second) << "," << fmt(dev) << "\n";
      }
    }
    std::printf("max |eigenphase - oracle| = %.6e\n", worst);
  }

  std::printf("%zu k-point(s), %d failure(s); outputs in %s\n",
              results.size(), failures, cfg.out_dir.c_str());
  return failures == 0 ? 0 : 1;
}

int cmd_check(const RunConfig& cfg) {
  json checks = json::array();
  bool all_pass = true;
  auto add_check = [&](const std::string& name, double measured, double tol,
                       bool pass, const std::string& note = "") {
    checks.push_back({{"name", name},
                      {"measured", measured},
                      {"tolerance", tol},
                      {"pass", pass},
                      {"note", note}});
    all_pass = all_pass && pass;
    std::printf("[%s] %s: measured=%.3e tol=%.3e %s\n", pass ? "PASS" : "FAIL",
                name.c_str(), measured, tol, note.c_str());
  };

  const Complex k = cfg.k_values.empty() ? Complex(1.0, 0.0) : cfg.k_values.front();
  const MultipoleField field = make_field(cfg, k);
  const ChannelBasis basis = make_basis(cfg);
  const SolveOptions opts = make_options(cfg);

  ScatteringResult res;
  if (cfg.engine == Engine::Maxwell) {
    res = maxwell_s_matrix(field, basis, k, opts);
  } else {
    res = s_matrix(field, basis, k, opts);
  }

  // Unitarity (meaningful for real sources at real k).
  if (field.declared_real() && k.imag() == 0.0) {
    add_check("unitarity", res.diagnostics.unitarity_residual,
              cfg.unitarity_tol,
              res.diagnostics.unitarity_residual < cfg.unitarity_tol);
  } else {
    add_check("unitarity", res.diagnostics.unitarity_residual, 0.0, true,
              "skipped: complex source or wave number");
  }

  // Projector commutation (Maxwell only).
  if (cfg.engine == Engine::Maxwell) {
    add_check("projector_commutator", res.diagnostics.projector_commutator,
              cfg.commutator_tol,
              res.diagnostics.projector_commutator < cfg.commutator_tol);
  }

  // Fitting-point independence under r0 doubling.
  {
    SolveOptions moved = opts;
    const Radii base = default_radii(k, field, opts);
    moved.r0 = 2.0 * base.r0;
    ScatteringResult res2;
    if (cfg.engine == Engine::Maxwell) {
      res2 = maxwell_s_matrix(field, basis, k, moved);
    } else {
      res2 = s_matrix(field, basis, k, moved);
    }
    const double drift =
        res.S_projected.size()
            ? spectral_norm(res.S_projected - res2.S_projected)
            : spectral_norm(res.S - res2.S);
    add_check("fitting_point_independence", drift, cfg.fitting_tol,
              drift < cfg.fitting_tol);
  }

  // Oracle agreement for recognized sources at real k. The tolerance carries
  // a first-order smoothing allowance for dielectric profiles.
  if (k.imag() == 0.0) {
    const auto oracle = oracle_phases(cfg, k.real());
    if (!oracle.empty()) {
      const ComplexMatrix& s =
          res.S_projected.size() ? res.S_projected : res.S;
      double worst = 0.0;
      for (size_t i = 0; i < oracle.size(); ++i) {
        double dev = std::abs(0.5 * std::arg(s(i, i)) - oracle[i].second);
        if (dev > pi / 2) dev = pi - dev;
        worst = std::max(worst, dev);
      }
      double tol = 5e-3;
      if (cfg.engine == Engine::Maxwell) {
        const double steep = cfg.source.params.value("s", 50.0);
        tol += 0.45 * std::abs(k) / steep;
      }
      add_check("oracle_agreement", worst, tol, worst < tol);
    }
  }

  json report;
  report["checks"] = checks;
  report["all_pass"] = all_pass;
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::ofstream(fs::path(cfg.out_dir) / "checks.json") << report.dump(1) << "\n";
  return all_pass ? 0 : 1;
}

int cmd_oracle(const std::string& kind, int l, int pol, double v0, double n,
               double a, double kmin, double kmax, int knum,
               const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "oracle.csv");
  csv << "k,s_re,s_im,eigenphase\n";
  for (int i = 0; i < knum; ++i) {
    const double k = knum == 1 ? kmin : kmin + (kmax - kmin) * i / (knum - 1);
    Complex s;
    if (kind == "square_well") {
      s = s_exact_square_well(l, k, v0, a);
    } else if (kind == "dielectric_sphere") {
      s = s_exact_dielectric_sphere(l, pol, k, n, a);
    } else {
      std::fprintf(stderr, "unknown oracle kind: %s\n", kind.c_str());
      return 2;
    }
    csv << fmt(k) << "," << fmt(s.real()) << "," << fmt(s.imag()) << ","
        << fmt(0.5 * std::arg(s)) << "\n";
  }
  std::printf("oracle table written to %s/oracle.csv\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-channel variable-phase scattering calculations"};
  app.require_subcommand(1);

  std::string config_path, engine_override, out_override;
  double kmin = 0.0, kmax = 0.0, r0_override = 0.0;
  int knum = 0, trunc_override = -1, threads = 0;
  bool k_imag = false, compare_oracle = false;

  auto add_run_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--engine", engine_override, "scalar|vector|maxwell");
    cmd->add_option("--kmin", kmin, "sweep start");
    cmd->add_option("--kmax", kmax, "sweep end");
    cmd->add_option("--knum", knum, "sweep points");
    cmd->add_flag("--k-imag", k_imag, "interpret the sweep as k = i kappa");
    cmd->add_option("--jmax,--lmax", trunc_override, "basis truncation");
    cmd->add_option("--r0", r0_override, "fitting radius override");
    cmd->add_option("--out", out_override, "output directory");
    cmd->add_option("--threads", threads, "worker threads (default: hardware)");
  };

  CLI::App* run = app.add_subcommand("run", "k sweep with table outputs");
  add_run_opts(run);
  run->add_flag("--oracle", compare_oracle,
                "emit closed-form comparison for recognized sources");

  CLI::App* check = app.add_subcommand("check", "consistency-check report");
  add_run_opts(check);

  CLI::App* oracle = app.add_subcommand("oracle", "closed-form S tables");
  std::string okind = "square_well", oout = "results";
  int ol = 0, opol = 1;
  double ov0 = -1.0, on = 1.5, oa = 1.0, okmin = 0.5, okmax = 3.0;
  int oknum = 10;
  oracle->add_option("--kind", okind, "square_well|dielectric_sphere")->required();
  oracle->add_option("--l,--j", ol, "channel index");
  oracle->add_option("--pol", opol, "+1 (M) or -1 (N), dielectric only");
  oracle->add_option("--v0", ov0, "well height");
  oracle->add_option("--n", on, "refractive index");
  oracle->add_option("--a", oa, "radius");
  oracle->add_option("--kmin", okmin, "sweep start");
  oracle->add_option("--kmax", okmax, "sweep end");
  oracle->add_option("--knum", oknum, "sweep points");
  oracle->add_option("--out", oout, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (oracle->parsed())
      return cmd_oracle(okind, ol, opol, ov0, on, oa, okmin, okmax, oknum, oout);

    RunConfig cfg = load_config(config_path);
    if (!engine_override.empty()) cfg.engine = parse_engine(engine_override);
    if (trunc_override >= 0) cfg.truncation = trunc_override;
    if (knum > 0) {
      cfg.k_values.clear();
      for (int i = 0; i < knum; ++i) {
        const double v = knum == 1 ? kmin : kmin + (kmax - kmin) * i / (knum - 1);
        cfg.k_values.push_back(k_imag ? Complex(0.0, v) : Complex(v, 0.0));
      }
    }
    if (r0_override > 0.0) cfg.r0 = r0_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (threads > 0) cfg.threads = threads;
    cfg.compare_oracle = compare_oracle;

    if (run->parsed()) return cmd_run(cfg);
    if (check->parsed()) return cmd_check(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
