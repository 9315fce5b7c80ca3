#include "amopt/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "amopt/errors.hpp"
#include "amopt/log.hpp"
#include "amopt/opt/bayes.hpp"
#include "amopt/opt/gradient_descent.hpp"
#include "amopt/opt/local_variations.hpp"
#include "amopt/sensitivity.hpp"

namespace amopt {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir + "/" + name);
  if (!os) throw ConfigError("cannot open output file: " + dir + "/" + name);
  return os;
}

}  // namespace

ScenarioRunner::ScenarioRunner(const RunConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

std::shared_ptr<const ScenarioRunner::Discretization> ScenarioRunner::discretization(
    int n_layers) const {
  {
    std::lock_guard<std::mutex> lk(mutex_);
    auto it = mesh_cache_.find(n_layers);
    if (it != mesh_cache_.end()) return it->second;
  }
  BuildPlan plan = cfg_.build;
  plan.n_layers = n_layers;
  auto disc = std::make_shared<Discretization>();
  disc->mesh = build_mesh(plan);
  disc->surface = cfg_.objective == ObjectiveVariant::TopEdge
                      ? make_top_edge_surface(disc->mesh)
                      : make_step_edge_surface(disc->mesh);
  if (cfg_.characteristic_length > 0.0) disc->surface.L_c = cfg_.characteristic_length;
  std::lock_guard<std::mutex> lk(mutex_);
  auto [it, inserted] = mesh_cache_.emplace(n_layers, std::move(disc));
  return it->second;
}

SimulationOutput ScenarioRunner::simulate(const DesignPoint& dp, bool with_gradient,
                                          const std::function<void(const SimState&, int)>& on_step,
                                          bool track_birth_stress) const {
  auto disc = discretization(dp.n_layers);
  BuildPlan plan = cfg_.build;
  plan.n_layers = dp.n_layers;
  plan.dt_element = dp.dt_element;
  const ActivationSchedule schedule = make_schedule(plan, disc->mesh);

  MaterialParams mat = cfg_.material;
  mat.h_conv = convection_to_internal(dp.h_w_m2k);

  SimOptions options;
  options.track_birth_stress = track_birth_stress;
  options.on_step = on_step;
  if (with_gradient) options.sensitivity = DesignVariable::ConvectionCoefficient;

  Simulator sim(disc->mesh, schedule, mat, options);
  SimulationOutput out;
  out.state = sim.initial_state();
  if (with_gradient) {
    SensitivityState sens = sim.initial_sensitivity();
    out.summary = sim.run(out.state, &sens);
    const Eigen::VectorXd dfdu = shape_error_gradient_u(out.state.u, disc->surface,
                                                        disc->mesh.n_nodes(), disc->mesh.hanging);
    // d f / d h in configuration units (per W/(m^2 K)).
    out.df_dh = total_gradient(dfdu, sens) * convection_to_internal(1.0);
  } else {
    out.summary = sim.run(out.state);
  }
  out.f_h = shape_error(out.state.u, disc->surface);
  return out;
}

double ScenarioRunner::objective(const DesignPoint& dp) const {
  const std::tuple<double, double, int> key{dp.h_w_m2k, dp.dt_element, dp.n_layers};
  {
    std::lock_guard<std::mutex> lk(mutex_);
    auto it = value_cache_.find(key);
    if (it != value_cache_.end()) return it->second;
  }
  const double f = simulate(dp).f_h;
  std::lock_guard<std::mutex> lk(mutex_);
  value_cache_.emplace(key, f);
  ++evaluations_;
  return f;
}

std::vector<double> ScenarioRunner::objective_batch(const std::vector<DesignPoint>& pts,
                                                    int jobs) const {
  std::vector<double> out(pts.size(), std::nan(""));
  // Meshes materialize up front so workers only read the shared cache.
  for (const DesignPoint& dp : pts) discretization(dp.n_layers);
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(pts.size())));
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= pts.size()) return;
      try {
        out[i] = objective(pts[i]);
      } catch (const SolverError& e) {
        log_info(std::string("probe failed: ") + e.what());
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

int ScenarioRunner::evaluation_count() const {
  std::lock_guard<std::mutex> lk(mutex_);
  return evaluations_;
}

GradientCheckReport run_gradient_check(const ScenarioRunner& runner) {
  const RunConfig& cfg = runner.config();
  GradientCheckReport report;
  report.threshold = cfg.gradient_check.threshold;
  report.passed = true;
  const DesignPoint base = DesignPoint::from_config(cfg);
  for (double h : cfg.gradient_check.h_values) {
    DesignPoint dp = base;
    dp.h_w_m2k = h;
    const double analytic = runner.simulate(dp, true).df_dh;
    const double step = cfg.gradient_check.fd_step_rel * h;
    DesignPoint hi = dp, lo = dp;
    hi.h_w_m2k = h + step;
    lo.h_w_m2k = h - step;
    const double fd = (runner.simulate(hi).f_h - runner.simulate(lo).f_h) / (2.0 * step);
    const double denom = std::max(std::abs(fd), 1e-300);
    GradientCheckRow row{h, analytic, fd, std::abs(analytic - fd) / denom};
    report.passed = report.passed && row.rel_err < report.threshold;
    report.rows.push_back(row);
  }
  return report;
}

int cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
  const ScenarioRunner runner(cfg);
  std::function<void(const SimState&, int)> on_step;
  auto disc = runner.discretization(cfg.build.n_layers);
  if (cfg.output.snapshot_interval > 0) {
    const std::string dir = out_dir;
    const Mesh* mesh = &disc->mesh;
    const int every = cfg.output.snapshot_interval;
    on_step = [dir, mesh, every](const SimState& s, int step) {
      if (step % every != 0) return;
      char name[64];
      std::snprintf(name, sizeof(name), "fields_step%06d.txt", step);
      auto os = open_out(dir, name);
      write_field_snapshot(os, *mesh, s);
    };
  }
  const SimulationOutput out =
      runner.simulate(DesignPoint::from_config(cfg), false, on_step, true);

  double max_dev = 0.0;
  for (int n = 0; n < disc->mesh.n_nodes(); ++n)
    if (out.state.node_active[n])
      max_dev = std::max(max_dev, std::abs(out.state.theta[n] - cfg.material.theta_inf));

  {
    auto os = open_out(out_dir, "fields_final.txt");
    write_field_snapshot(os, disc->mesh, out.state);
  }
  auto os = open_out(out_dir, "summary.csv");
  os << "key,value\n";
  os << "f_h," << fmt(out.f_h) << "\n";
  os << "steps," << out.summary.steps << "\n";
  os << "end_time," << fmt(out.summary.end_time) << "\n";
  os << "max_birth_stress," << fmt(out.summary.max_birth_stress) << "\n";
  os << "max_abs_temp_dev," << fmt(max_dev) << "\n";

  std::printf("f_h %s\n", fmt(out.f_h).c_str());
  std::printf("steps %d\n", out.summary.steps);
  std::printf("end_time %s\n", fmt(out.summary.end_time).c_str());
  std::printf("max_birth_stress %s\n", fmt(out.summary.max_birth_stress).c_str());
  std::printf("max_abs_temp_dev %s\n", fmt(max_dev).c_str());
  return 0;
}

int cmd_verify_gradient(const RunConfig& cfg, const std::string& out_dir) {
  const ScenarioRunner runner(cfg);
  const GradientCheckReport report = run_gradient_check(runner);
  auto os = open_out(out_dir, "gradient_check.csv");
  os << "h,analytic,fd,rel_err\n";
  std::printf("%12s %22s %22s %12s\n", "h", "analytic", "fd", "rel_err");
  for (const auto& row : report.rows) {
    os << fmt(row.h) << "," << fmt(row.analytic) << "," << fmt(row.finite_difference) << ","
       << fmt(row.rel_err) << "\n";
    std::printf("%12g %22.14e %22.14e %12.3e\n", row.h, row.analytic, row.finite_difference,
                row.rel_err);
  }
  std::printf("threshold %g: %s\n", report.threshold, report.passed ? "PASS" : "FAIL");
  return report.passed ? 0 : 4;
}

namespace {

int optimize_gd(const ScenarioRunner& runner, const RunConfig& cfg, const std::string& out_dir) {
  const DesignPoint base = DesignPoint::from_config(cfg);
  opt::BoxedProblem problem;
  problem.lo = Eigen::VectorXd::Constant(1, cfg.gd.h_min);
  problem.hi = Eigen::VectorXd::Constant(1, cfg.gd.h_max);
  problem.alpha0 = cfg.gd.alpha0;
  problem.rho = cfg.gd.rho;
  problem.eta = cfg.gd.eta;
  problem.max_iterations = cfg.gd.max_iterations;
  problem.step_tol = cfg.gd.step_tol;
  problem.value = [&](const Eigen::VectorXd& y) {
    DesignPoint dp = base;
    dp.h_w_m2k = y[0];
    return runner.objective(dp);
  };
  problem.value_and_gradient = [&](const Eigen::VectorXd& y) {
    DesignPoint dp = base;
    dp.h_w_m2k = y[0];
    const SimulationOutput out = runner.simulate(dp, true);
    return std::pair{out.f_h, Eigen::VectorXd::Constant(1, out.df_dh).eval()};
  };
  const opt::GdResult res = opt::minimize(problem, Eigen::VectorXd::Constant(1, cfg.gd.h0));

  auto os = open_out(out_dir, "history.csv");
  os << "k,h,f,grad_norm,alpha\n";
  for (const auto& it : res.log)
    os << it.k << "," << fmt(it.y[0]) << "," << fmt(it.f) << "," << fmt(it.grad_norm) << ","
       << fmt(it.alpha) << "\n";
  auto ro = open_out(out_dir, "result.csv");
  ro << "key,value\n";
  ro << "h," << fmt(res.y[0]) << "\n";
  ro << "f," << fmt(res.f) << "\n";
  ro << "status," << res.status << "\n";
  std::printf("optimum h %s\n", fmt(res.y[0]).c_str());
  std::printf("f %s\n", fmt(res.f).c_str());
  std::printf("status %s\n", res.status.c_str());
  return res.status == "aborted" ? 3 : 0;
}

int optimize_lv(const ScenarioRunner& runner, const RunConfig& cfg, const std::string& out_dir,
                int jobs) {
  const DesignPoint base = DesignPoint::from_config(cfg);
  const FreeConfig& fo = cfg.free_opt;
  auto to_point = [&](const Eigen::VectorXd& y) {
    DesignPoint dp = base;
    dp.dt_element = y[0];
    dp.n_layers = static_cast<int>(std::lround(y[1]));
    return dp;
  };
  opt::VariationProblem problem;
  problem.is_integer = {false, true};
  problem.lo = Eigen::Vector2d(fo.dt_min, fo.layers_min);
  problem.hi = Eigen::Vector2d(fo.dt_max, fo.layers_max);
  problem.tau0 = Eigen::Vector2d(fo.tau0_dt, fo.tau0_layers);
  problem.tau_min = Eigen::Vector2d(fo.tau_min_dt, fo.tau_min_layers);
  problem.f = [&](const Eigen::VectorXd& y) { return runner.objective(to_point(y)); };
  problem.batch_f = [&](const std::vector<Eigen::VectorXd>& ys) {
    std::vector<DesignPoint> pts;
    pts.reserve(ys.size());
    for (const auto& y : ys) pts.push_back(to_point(y));
    return runner.objective_batch(pts, jobs);
  };
  const opt::LvResult res =
      opt::minimize(problem, Eigen::Vector2d(fo.dt0, static_cast<double>(fo.layers0)));

  auto os = open_out(out_dir, "history.csv");
  os << "iteration,dt,layers,f,accepted,skipped\n";
  for (const auto& p : res.probes)
    os << p.iteration << "," << fmt(p.y[0]) << "," << static_cast<int>(std::lround(p.y[1])) << ","
       << fmt(p.f) << "," << (p.accepted ? 1 : 0) << "," << (p.skipped ? 1 : 0) << "\n";
  auto ro = open_out(out_dir, "result.csv");
  ro << "key,value\n";
  ro << "dt," << fmt(res.y[0]) << "\n";
  ro << "layers," << static_cast<int>(std::lround(res.y[1])) << "\n";
  ro << "f," << fmt(res.f) << "\n";
  ro << "evaluations," << res.evaluations << "\n";
  std::printf("optimum dt %s layers %d\n", fmt(res.y[0]).c_str(),
              static_cast<int>(std::lround(res.y[1])));
  std::printf("f %s\n", fmt(res.f).c_str());
  return 0;
}

int optimize_bo(const ScenarioRunner& runner, const RunConfig& cfg, const std::string& out_dir,
                int jobs) {
  const DesignPoint base = DesignPoint::from_config(cfg);
  const FreeConfig& fo = cfg.free_opt;
  auto to_point = [&](const Eigen::VectorXd& y) {
    DesignPoint dp = base;
    dp.dt_element = y[0];
    dp.n_layers = static_cast<int>(std::lround(y[1]));
    return dp;
  };
  const Eigen::Vector2d lo(fo.dt_min, fo.layers_min);
  const Eigen::Vector2d hi(fo.dt_max, fo.layers_max);
  opt::BoOptions options;
  options.is_integer = {false, true};
  options.acquisition.xi = fo.xi;
  options.max_proposals = fo.max_proposals;
  options.tol_y = fo.bo_tol;
  options.tol_value = fo.bo_tol;
  options.seed = cfg.output.seed;
  const auto initial =
      opt::corner_designs(lo, hi, fo.initial_design == 9 ? 3 : 2, options.is_integer);

  const opt::BoResult res = opt::optimize(
      [&](const Eigen::VectorXd& y) { return runner.objective(to_point(y)); }, initial, lo, hi,
      options, [&](const std::vector<Eigen::VectorXd>& ys) {
        std::vector<DesignPoint> pts;
        pts.reserve(ys.size());
        for (const auto& y : ys) pts.push_back(to_point(y));
        return runner.objective_batch(pts, jobs);
      });

  auto os = open_out(out_dir, "history.csv");
  os << "iteration,dt,layers,f,theta_len,ei\n";
  for (const auto& h : res.history)
    os << h.iteration << "," << fmt(h.proposal[0]) << ","
       << static_cast<int>(std::lround(h.proposal[1])) << "," << fmt(h.f) << ","
       << fmt(h.theta_len) << "," << fmt(h.ei) << "\n";

  // Posterior grid for contour plots, in objective (f_h) units.
  auto gs = open_out(out_dir, "surrogate_grid.csv");
  gs << "dt,layers,mu,sigma\n";
  const int g = 33;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      Eigen::Vector2d y{lo[0] + (hi[0] - lo[0]) * i / (g - 1),
                        lo[1] + (hi[1] - lo[1]) * j / (g - 1)};
      const opt::GpPosterior post = opt::gp_posterior(res.surrogate, y);
      gs << fmt(y[0]) << "," << fmt(y[1]) << "," << fmt(res.surrogate.unscale_value(post.mean))
         << "," << fmt(std::sqrt(post.variance) * res.surrogate.value_scale) << "\n";
    }

  auto ro = open_out(out_dir, "result.csv");
  ro << "key,value\n";
  ro << "dt," << fmt(res.y[0]) << "\n";
  ro << "layers," << static_cast<int>(std::lround(res.y[1])) << "\n";
  ro << "f," << fmt(res.f) << "\n";
  ro << "converged," << (res.converged ? 1 : 0) << "\n";
  ro << "proposals," << res.history.size() << "\n";
  std::printf("optimum dt %s layers %d\n", fmt(res.y[0]).c_str(),
              static_cast<int>(std::lround(res.y[1])));
  std::printf("f %s\n", fmt(res.f).c_str());
  std::printf("proposals %zu converged %d\n", res.history.size(), res.converged ? 1 : 0);
  return 0;
}

}  // namespace

int cmd_optimize(const RunConfig& cfg, const std::string& out_dir, int jobs) {
  const ScenarioRunner runner(cfg);
  switch (cfg.algorithm) {
    case Algorithm::GradientDescent: return optimize_gd(runner, cfg, out_dir);
    case Algorithm::LocalVariations: return optimize_lv(runner, cfg, out_dir, jobs);
    case Algorithm::Bayesian: return optimize_bo(runner, cfg, out_dir, jobs);
  }
  return 2;
}

}  // namespace amopt
