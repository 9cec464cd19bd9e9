// Command-line front end: instance generation, single solves with certified
// bounds, and family sweeps emitting CSV rows and per-iteration traces.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eb/bqp.hpp"
#include "eb/certify.hpp"
#include "eb/ddfact.hpp"
#include "eb/dopt.hpp"
#include "eb/instances.hpp"
#include "eb/linx.hpp"
#include "eb/matcore.hpp"

namespace {

using eb::Index;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitLimit = 3;

struct LoadedInstance {
  std::string kind;  // "dopt" | "mesp"
  eb::DoptInstance dopt;
  eb::MespInstance mesp;
  std::string name;
};

LoadedInstance load_instance(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path);
  nlohmann::json j = nlohmann::json::parse(in);
  LoadedInstance li;
  li.kind = j.at("kind").get<std::string>();
  std::string mpath = j.at("source_path").get<std::string>();
  // matrix paths are relative to the manifest's directory
  auto slash = manifest_path.find_last_of('/');
  if (slash != std::string::npos && !mpath.empty() && mpath[0] != '/')
    mpath = manifest_path.substr(0, slash + 1) + mpath;
  eb::Matrix M = eb::load_matrix(mpath, eb::MatrixFormat::whitespace);
  if (li.kind == "dopt") {
    li.dopt.A = std::move(M);
    li.dopt.s = j.at("s").get<Index>();
    li.dopt.seed = j.value("seed", std::uint64_t{0});
    li.dopt.scale = j.value("scale", 1.0);
  } else if (li.kind == "mesp") {
    li.mesp.C = std::move(M);
    li.mesp.s = j.at("s").get<Index>();
    li.mesp.seed = j.value("seed", std::uint64_t{0});
    li.mesp.gamma = j.value("gamma", 1.0);
    li.mesp.offset = j.value("offset", 0.0);
  } else {
    throw std::runtime_error("unknown instance kind: " + li.kind);
  }
  auto base = manifest_path.substr(slash == std::string::npos ? 0 : slash + 1);
  auto dot = base.rfind('.');
  li.name = dot == std::string::npos ? base : base.substr(0, dot);
  return li;
}

void write_instance(const std::string& prefix, const eb::Matrix& M,
                    const std::string& manifest) {
  eb::save_matrix(prefix + ".mat", M, eb::MatrixFormat::whitespace);
  std::ofstream out(prefix + ".json");
  if (!out) throw std::runtime_error("cannot write " + prefix + ".json");
  out << manifest << "\n";
}

std::string matrix_basename(const std::string& prefix) {
  auto slash = prefix.find_last_of('/');
  return (slash == std::string::npos ? prefix : prefix.substr(slash + 1)) +
         ".mat";
}

void write_trace(const std::string& path, const eb::BoundReport& rep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace " + path);
  out << "iter,time_s,primal,bound,gap,res_primal,res_dual\n";
  out.precision(12);
  for (const auto& t : rep.trace)
    out << t.iter << ',' << t.time_s << ',' << t.primal << ',' << t.bound
        << ',' << t.gap << ',' << t.res_primal << ',' << t.res_dual << "\n";
}

struct SolveArgs {
  std::string instance;
  eb::SolveOptions opts;
  double gamma = 1.0;
  bool gamma_search = false;
  bool complement = false;
  bool auto_complement = false;
  std::string factorization = "spectral";
  bool project_lambda = false;
  std::string trace_path;
  std::string json_path;
};

void add_solver_flags(CLI::App* cmd, SolveArgs& a) {
  cmd->add_option("--instance", a.instance, "instance manifest (JSON)")
      ->required();
  cmd->add_option("--rho", a.opts.rho, "ADMM penalty (0 = family default)");
  cmd->add_option("--gap-tol", a.opts.gap_tol, "absolute dual-gap tolerance");
  cmd->add_option("--feas-tol", a.opts.feas_tol, "feasibility tolerance");
  cmd->add_option("--max-iter", a.opts.max_iter, "iteration limit");
  cmd->add_option("--time-limit", a.opts.time_limit_s, "time limit (s)");
  cmd->add_option("--cert-period", a.opts.cert_period,
                  "iterations between certificates");
  cmd->add_option("--cert-start", a.opts.cert_start,
                  "first certification iteration (bqp)");
  cmd->add_option("--seed", a.opts.seed, "recorded run seed");
  cmd->add_option("--trace", a.trace_path, "per-iteration trace CSV output");
  cmd->add_option("--json", a.json_path, "write the report JSON to a file");
}

int finish(const SolveArgs& a, const eb::BoundReport& rep) {
  if (!a.trace_path.empty()) write_trace(a.trace_path, rep);
  std::string js = rep.to_json();
  if (!a.json_path.empty()) {
    std::ofstream out(a.json_path);
    out << js << "\n";
  }
  std::cout << js << std::endl;
  return rep.termination == eb::Termination::gap_tol ? kExitOk : kExitLimit;
}

int run_solve(const std::string& relaxation, SolveArgs& a) {
  LoadedInstance li = load_instance(a.instance);
  a.opts.collect_trace = !a.trace_path.empty();

  if (relaxation == "nat") {
    if (li.kind != "dopt")
      throw CLI::ValidationError("solve nat", "requires a D-optimality instance");
    return finish(a, eb::solve_nat(li.dopt, a.opts));
  }

  if (li.kind != "mesp")
    throw CLI::ValidationError("solve " + relaxation,
                               "requires a MESP instance");
  eb::MespInstance inst = li.mesp;
  if (a.complement) inst = eb::complement_instance(inst);

  if (relaxation == "linx") {
    if (a.gamma_search) {
      auto res = eb::gamma_search([&](double g) {
        return eb::solve_linx(inst, a.opts, g).bound;
      });
      a.gamma = res.gamma_star;
    }
    return finish(a, eb::solve_linx(inst, a.opts, a.gamma));
  }
  if (relaxation == "ddfact") {
    eb::FactorChoice fc = eb::factorize(
        inst.C, eb::factor_method_from_string(a.factorization));
    eb::ZUpdateOptions z{a.project_lambda};
    return finish(a, eb::solve_ddfact(inst, fc, a.opts, z));
  }
  if (relaxation == "bqp") {
    eb::BqpSolveExtras ex{a.auto_complement};
    if (a.gamma_search) {
      auto res = eb::gamma_search([&](double g) {
        return eb::solve_bqp(inst, a.opts, g, ex).bound;
      });
      a.gamma = res.gamma_star;
    }
    return finish(a, eb::solve_bqp(inst, a.opts, a.gamma, ex));
  }
  throw CLI::ValidationError("solve", "unknown relaxation " + relaxation);
}

struct BenchArgs {
  std::string relaxation = "ddfact";
  std::string family = "mesp-rank";
  std::string vary = "r";
  long from = 15, to = 20, step = 1;
  Index m = 15, n = 200, rank = 15, s = 14;
  double scale = 0.01;
  std::uint64_t seed = 1;
  eb::SolveOptions opts;
  double gamma = 1.0;
  std::string out = "bench.csv";
  std::string trace_dir;
  int jobs = 1;
};

struct BenchRow {
  std::string instance;
  std::string status = "ok";
  eb::BoundReport rep;
};

BenchRow bench_run(const BenchArgs& b, long v) {
  BenchArgs p = b;
  if (b.vary == "m") p.m = v;
  else if (b.vary == "n") p.n = v;
  else if (b.vary == "r") p.rank = v;
  else if (b.vary == "s") p.s = v;
  else throw std::runtime_error("bench: --vary must be one of m,n,r,s");

  BenchRow row;
  std::ostringstream nm;
  nm << b.family << "-" << b.vary << v << "-seed" << b.seed;
  row.instance = nm.str();
  eb::SolveOptions opts = b.opts;
  opts.seed = b.seed;
  opts.collect_trace = !b.trace_dir.empty();
  try {
    if (b.family == "random-dopt") {
      eb::DoptInstance inst = eb::gen_random_dopt(p.m, b.seed, p.scale);
      row.rep = eb::solve_nat(inst, opts);
    } else if (b.family == "mesp-rank") {
      eb::MespInstance inst = eb::gen_mesp_rank(p.n, p.rank, p.s, b.seed);
      if (b.relaxation == "linx") {
        row.rep = eb::solve_linx(inst, opts, b.gamma);
      } else if (b.relaxation == "bqp") {
        row.rep = eb::solve_bqp(inst, opts, b.gamma);
      } else {
        eb::FactorChoice fc =
            eb::factorize(inst.C, eb::FactorMethod::spectral);
        row.rep = eb::solve_ddfact(inst, fc, opts);
      }
    } else {
      throw std::runtime_error("bench: unknown family " + b.family);
    }
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  return row;
}

int run_bench(const BenchArgs& b) {
  std::vector<long> values;
  for (long v = b.from; v <= b.to; v += b.step) values.push_back(v);

  int jobs = b.jobs;
  if (const char* env = std::getenv("ENTROPY_BOUNDS_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0 && cap < jobs) jobs = cap;
  }
  if (jobs < 1) jobs = 1;

  std::vector<BenchRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= values.size()) break;
      rows[i] = bench_run(b, values[i]);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::ofstream out(b.out);
  if (!out) throw std::runtime_error("cannot write " + b.out);
  out << "instance,method,gamma,rho,seed,iterations,time_s,bound,primal,gap,"
         "termination,status\n";
  out.precision(12);
  for (const auto& r : rows) {
    out << r.instance << ',' << b.relaxation << ',' << r.rep.gamma << ','
        << r.rep.rho << ',' << r.rep.seed << ',' << r.rep.iterations << ','
        << r.rep.wall_time_s << ',' << r.rep.bound << ',' << r.rep.primal_value
        << ',' << r.rep.dual_gap << ',' << to_string(r.rep.termination) << ','
        << '"' << r.status << '"' << "\n";
    if (!b.trace_dir.empty() && r.status == "ok")
      write_trace(b.trace_dir + "/" + r.instance + ".trace.csv", r.rep);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified convex-relaxation bounds for maximum-entropy "
               "sampling and 0/1 D-optimal design"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate an instance");
  gen->require_subcommand(1);
  struct {
    Index m = 15, n = 150, rank = 30, s = 0, factors = 10;
    double scale = 1.0;
    std::uint64_t seed = 1;
    std::string out = "instance";
  } g;

  auto* grd = gen->add_subcommand("random-dopt", "Gaussian design rows");
  grd->add_option("--m", g.m)->required();
  grd->add_option("--scale", g.scale);
  grd->add_option("--seed", g.seed);
  grd->add_option("--out", g.out);

  auto* gl = gen->add_subcommand("linear", "linear-response design");
  gl->add_option("--factors", g.factors)->required();
  gl->add_option("--n", g.n)->required();
  gl->add_option("--s", g.s);
  gl->add_option("--seed", g.seed);
  gl->add_option("--out", g.out);

  auto* gq = gen->add_subcommand("quadratic", "quadratic-response design");
  gq->add_option("--factors", g.factors)->required();
  gq->add_option("--n", g.n)->required();
  gq->add_option("--s", g.s);
  gq->add_option("--seed", g.seed);
  gq->add_option("--out", g.out);

  auto* gm = gen->add_subcommand("mesp-rank", "rank-limited PSD covariance");
  gm->add_option("--n", g.n)->required();
  gm->add_option("--rank", g.rank)->required();
  gm->add_option("--s", g.s);
  gm->add_option("--seed", g.seed);
  gm->add_option("--out", g.out);

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "solve one relaxation");
  solve->require_subcommand(1);
  SolveArgs sa;
  std::vector<std::pair<std::string, CLI::App*>> solve_cmds;
  for (const char* name : {"nat", "linx", "ddfact", "bqp"}) {
    auto* c = solve->add_subcommand(name);
    add_solver_flags(c, sa);
    if (std::string(name) == "linx" || std::string(name) == "bqp") {
      c->add_option("--gamma", sa.gamma, "scaling parameter");
      c->add_flag("--gamma-search", sa.gamma_search,
                  "golden-section search over gamma");
    }
    if (std::string(name) != "nat") {
      c->add_flag("--complement", sa.complement,
                  "solve the complementary instance");
    }
    if (std::string(name) == "bqp")
      c->add_flag("--auto-complement", sa.auto_complement,
                  "solve both and keep the smaller bound");
    if (std::string(name) == "ddfact") {
      c->add_option("--factorization", sa.factorization,
                    "chol | spectral | sqrt");
      c->add_flag("--project-lambda", sa.project_lambda,
                  "clamp negative prox eigenvalues");
    }
    solve_cmds.emplace_back(name, c);
  }

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "family sweep to CSV");
  BenchArgs ba;
  bench->add_option("--relaxation", ba.relaxation, "nat via random-dopt; "
                    "linx | ddfact | bqp via mesp-rank");
  bench->add_option("--family", ba.family, "random-dopt | mesp-rank");
  bench->add_option("--vary", ba.vary, "m | n | r | s");
  bench->add_option("--from", ba.from)->required();
  bench->add_option("--to", ba.to)->required();
  bench->add_option("--step", ba.step);
  bench->add_option("--m", ba.m);
  bench->add_option("--n", ba.n);
  bench->add_option("--rank", ba.rank);
  bench->add_option("--s", ba.s);
  bench->add_option("--scale", ba.scale);
  bench->add_option("--seed", ba.seed);
  bench->add_option("--gamma", ba.gamma);
  bench->add_option("--rho", ba.opts.rho);
  bench->add_option("--gap-tol", ba.opts.gap_tol);
  bench->add_option("--max-iter", ba.opts.max_iter);
  bench->add_option("--time-limit", ba.opts.time_limit_s);
  bench->add_option("--out", ba.out);
  bench->add_option("--trace-dir", ba.trace_dir);
  bench->add_option("--jobs", ba.jobs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      std::string mat = matrix_basename(g.out);
      if (grd->parsed()) {
        eb::DoptInstance inst = eb::gen_random_dopt(g.m, g.seed, g.scale);
        write_instance(g.out, inst.A, eb::dopt_manifest_json(inst, mat));
      } else if (gl->parsed() || gq->parsed()) {
        eb::DoptInstance inst =
            gl->parsed() ? eb::gen_linear_response(g.factors, g.n, g.seed)
                         : eb::gen_quadratic_response(g.factors, g.n, g.seed);
        if (g.s > 0) inst.s = g.s;
        write_instance(g.out, inst.A, eb::dopt_manifest_json(inst, mat));
      } else if (gm->parsed()) {
        Index s = g.s > 0 ? g.s : g.rank - 1;
        eb::MespInstance inst = eb::gen_mesp_rank(g.n, g.rank, s, g.seed);
        write_instance(g.out, inst.C, eb::mesp_manifest_json(inst, mat));
      }
      return kExitOk;
    }
    if (solve->parsed()) {
      for (auto& [name, cmd] : solve_cmds)
        if (cmd->parsed()) return run_solve(name, sa);
    }
    if (bench->parsed()) return run_bench(ba);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
