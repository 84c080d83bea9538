#include "dpsgd/bench/config_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "dpsgd/error.hpp"

namespace dpsgd::bench {

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    T value{};
    get(key, value);
    out = value;
  }

  template <class T>
  void list(const char* key, std::vector<T>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array()) throw ConfigError(where_ + "." + key + ": expected an array");
    out.clear();
    for (const auto& e : *it) {
      if (!e.is_number_unsigned()) throw ConfigError(where_ + "." + key + ": expected non-negative integers");
      out.push_back(e.get<T>());
    }
  }

  /// Sub-object, or nullptr when absent.
  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string, std::less<>> seen_;
};

template <class E>
E parse_enum(const std::string& text, const std::vector<std::pair<const char*, E>>& names, const std::string& where) {
  for (const auto& [name, value] : names) {
    if (text == name) return value;
  }
  std::string options;
  for (const auto& [name, value] : names) options += (options.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(where + ": unknown value '" + text + "' (expected one of " + options + ")");
}

const std::vector<std::pair<const char*, engine::DelayKind>> kDelayKinds = {
    {"none", engine::DelayKind::kNone},
    {"fixed", engine::DelayKind::kFixed},
    {"uniform", engine::DelayKind::kUniform},
    {"seeded-jitter", engine::DelayKind::kSeededJitter}};
const std::vector<std::pair<const char*, engine::StalenessPolicy>> kPolicies = {
    {"drop", engine::StalenessPolicy::kDrop}, {"block-worker", engine::StalenessPolicy::kBlockWorker}};
const std::vector<std::pair<const char*, engine::RhoKind>> kRhoKinds = {
    {"constant", engine::RhoKind::kConstant},
    {"corollary1", engine::RhoKind::kCorollary1},
    {"rescaled", engine::RhoKind::kRescaled},
    {"robbins_monro", engine::RhoKind::kRobbinsMonro}};
const std::vector<std::pair<const char*, engine::TransportKind>> kTransports = {
    {"inproc", engine::TransportKind::kInProc}, {"tcp", engine::TransportKind::kTcp}};
const std::vector<std::pair<const char*, engine::Ordering>> kOrderings = {
    {"virtual", engine::Ordering::kVirtual}, {"arrival", engine::Ordering::kArrival}};
const std::vector<std::pair<const char*, engine::CostMode>> kCostModes = {
    {"none", engine::CostMode::kNone}, {"sleep", engine::CostMode::kSleep}, {"busy", engine::CostMode::kBusy}};

template <class E>
std::string enum_name(E value, const std::vector<std::pair<const char*, E>>& names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

template <class E>
void get_enum(Fields& f, const char* key, E& out, const std::vector<std::pair<const char*, E>>& names,
              const std::string& where) {
  std::string text = enum_name(out, names);
  f.get(key, text);
  out = parse_enum(text, names, where + "." + key);
}

void read_delay(const json& j, engine::DelayModel& d) {
  Fields f(j, "delay");
  get_enum(f, "kind", d.kind, kDelayKinds, "delay");
  f.get("latency_us", d.latency_us);
  f.get("lo_us", d.lo_us);
  f.get("hi_us", d.hi_us);
  f.get("jitter_us", d.jitter_us);
  f.get("D_prime_bound", d.max_staleness);
  f.get("enforce", d.enforce);
  get_enum(f, "policy", d.policy, kPolicies, "delay");
  f.finish();
}

void read_rho(const json& j, engine::RhoSchedule& r) {
  Fields f(j, "rho_schedule");
  get_enum(f, "kind", r.kind, kRhoKinds, "rho_schedule");
  f.get("rho", r.rho);
  f.get("rho_base", r.rho_base);
  f.get("base_p", r.base_p);
  f.get("base_B", r.base_B);
  f.get("base_M", r.base_M);
  f.get("tau0", r.tau0);
  f.get("kappa", r.kappa);
  f.finish();
}

void read_problem(const json& j, problems::ProblemSpec& p) {
  Fields f(j, "problem");
  f.get("name", p.name);
  f.get("n", p.n);
  f.get("dim", p.dim);
  f.get("data_seed", p.data_seed);
  f.get("noise", p.noise);
  f.get("scale", p.scale);
  f.get("l2", p.l2);
  f.get("rank", p.rank);
  f.get("rows", p.rows);
  f.finish();
}

void read_theory(const json& j, engine::TheoryParams& t) {
  Fields f(j, "theory");
  f.get("f0_minus_fstar", t.f0_minus_fstar);
  f.get("A", t.A);
  f.get("alpha", t.alpha);
  f.get("mu", t.mu);
  f.get("L", t.L);
  f.get("D", t.D);
  f.finish();
}

engine::RunConfig read_run(const json& j, const std::string& where) {
  engine::RunConfig c;
  Fields f(j, where);
  f.get("T", c.T);
  f.get("M", c.M);
  f.get("nW", c.nW);
  f.get("p", c.p);
  f.get("B", c.B);
  f.get("eta", c.eta);
  f.get("seed", c.seed);
  f.get("batch_size", c.batch_size);
  f.get("sim_grad_cost_us", c.sim_grad_cost_us);
  get_enum(f, "cost_mode", c.cost_mode, kCostModes, where);
  get_enum(f, "transport", c.transport, kTransports, where);
  get_enum(f, "ordering", c.ordering, kOrderings, where);
  f.get("metrics_every", c.metrics_every);
  f.get("trace_overwrites", c.trace_overwrites);
  if (const json* d = f.child("delay")) read_delay(*d, c.delay);
  if (const json* r = f.child("rho_schedule")) read_rho(*r, c.rho_schedule);
  if (const json* p = f.child("problem")) read_problem(*p, c.problem);
  if (const json* t = f.child("theory")) read_theory(*t, c.theory);
  f.finish();
  return c;
}

void read_rl(const json& j, rl::RlParams& r) {
  Fields f(j, "rl");
  f.get("t_max", r.t_max);
  f.get("minibatch", r.minibatch);
  f.get("max_env_steps", r.max_env_steps);
  if (const json* e = f.child("env")) {
    Fields g(*e, "rl.env");
    std::optional<std::uint32_t> side;
    g.get("side", side);
    if (side) {
      const rl::GridWorld sq = rl::GridWorld::square(*side);
      r.env.rows = sq.rows;
      r.env.cols = sq.cols;
      r.env.start = sq.start;
      r.env.goal = sq.goal;
    }
    g.get("rows", r.env.rows);
    g.get("cols", r.env.cols);
    g.get("start", r.env.start);
    g.get("goal", r.env.goal);
    g.get("step_reward", r.env.step_reward);
    g.get("goal_reward", r.env.goal_reward);
    g.get("gamma", r.env.gamma);
    g.get("max_episode_steps", r.env.max_episode_steps);
    g.finish();
  }
  f.finish();
}

void read_lda(const json& j, lda::LdaParams& p) {
  Fields f(j, "lda");
  f.get("K", p.K);
  f.get("zeta", p.zeta);
  f.get("alpha_doc", p.alpha_doc);
  f.get("tol", p.tol);
  f.get("max_iters", p.max_iters);
  f.finish();
}

void read_corpus(const json& j, SviSpec& s) {
  Fields f(j, "corpus");
  f.get("docword", s.docword);
  f.get("vocab", s.vocab);
  if (const json* g = f.child("synthetic")) {
    Fields h(*g, "corpus.synthetic");
    auto& c = s.synthetic;
    h.get("K", c.K);
    h.get("V", c.V);
    h.get("docs", c.docs);
    h.get("doc_length", c.doc_length);
    h.get("doc_alpha", c.doc_alpha);
    h.get("topic_concentration", c.topic_concentration);
    h.get("seed", c.seed);
    h.finish();
  }
  f.finish();
}

}  // namespace

void ExperimentSpec::validate() const {
  base.validate();
  auto len = [](const auto& v) { return std::max<std::size_t>(1, v.size()); };
  if (reference >= len(nW) * len(p) * len(B) * len(M) * len(T)) {
    throw ConfigError("sweep: reference index out of range");
  }
  auto nonzero = [](const auto& v, const char* name) {
    for (auto x : v) {
      if (x == 0) throw ConfigError(std::string("sweep.") + name + ": values must be positive");
    }
  };
  nonzero(nW, "nW");
  nonzero(p, "p");
  nonzero(B, "B");
  nonzero(M, "M");
  nonzero(T, "T");
}

void SviSpec::validate() const {
  run.validate();
  if (lda.K == 0) throw ConfigError("lda.K must be positive");
  if (!(lda.zeta > 0.0) || !(lda.alpha_doc > 0.0)) throw ConfigError("lda: zeta and alpha_doc must be positive");
  if (!(lda.tol > 0.0) || lda.max_iters <= 0) throw ConfigError("lda: tol and max_iters must be positive");
  if (heldout_every < 2) throw ConfigError("heldout_every must be at least 2");
  if (docword.empty()) {
    const auto& c = synthetic;
    if (c.K == 0 || c.V == 0 || c.docs == 0 || c.doc_length == 0) {
      throw ConfigError("corpus.synthetic: sizes must be positive");
    }
    if (!(c.doc_alpha > 0.0) || !(c.topic_concentration > 0.0)) {
      throw ConfigError("corpus.synthetic: concentrations must be positive");
    }
  }
}

void RlSpec::validate() const {
  run.validate();
  rl.validate();
}

engine::RunConfig run_config_from_json(const json& j) {
  engine::RunConfig c = read_run(j, "config");
  c.validate();
  return c;
}

ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec s;
  Fields f(j, "sweep spec");
  if (const json* b = f.child("base")) s.base = read_run(*b, "base");
  if (const json* sw = f.child("sweep")) {
    Fields g(*sw, "sweep");
    g.list("nW", s.nW);
    g.list("p", s.p);
    g.list("B", s.B);
    g.list("M", s.M);
    g.list("T", s.T);
    g.finish();
  }
  f.get("reference", s.reference);
  f.get("target_loss", s.target_loss);
  f.get("rescale_rho", s.rescale_rho);
  f.finish();
  s.validate();
  return s;
}

SviSpec svi_from_json(const json& j) {
  SviSpec s;
  s.lda.K = s.synthetic.K;
  Fields f(j, "svi spec");
  if (const json* r = f.child("run")) s.run = read_run(*r, "run");
  if (const json* l = f.child("lda")) read_lda(*l, s.lda);
  if (const json* c = f.child("corpus")) read_corpus(*c, s);
  f.get("heldout_every", s.heldout_every);
  f.get("eval_every", s.eval_every);
  f.get("serial", s.serial);
  f.finish();
  s.validate();
  return s;
}

RlSpec rl_from_json(const json& j) {
  RlSpec s;
  Fields f(j, "rl spec");
  if (const json* r = f.child("run")) s.run = read_run(*r, "run");
  if (const json* r = f.child("rl")) read_rl(*r, s.rl);
  f.finish();
  s.validate();
  return s;
}

json to_json(const engine::RunConfig& c) {
  json delay = {{"kind", enum_name(c.delay.kind, kDelayKinds)},
                {"latency_us", c.delay.latency_us},
                {"lo_us", c.delay.lo_us},
                {"hi_us", c.delay.hi_us},
                {"jitter_us", c.delay.jitter_us},
                {"D_prime_bound", c.delay.max_staleness ? json(*c.delay.max_staleness) : json(nullptr)},
                {"enforce", c.delay.enforce},
                {"policy", enum_name(c.delay.policy, kPolicies)}};
  json rho = {{"kind", enum_name(c.rho_schedule.kind, kRhoKinds)},
              {"rho", c.rho_schedule.rho},
              {"rho_base", c.rho_schedule.rho_base},
              {"base_p", c.rho_schedule.base_p},
              {"base_B", c.rho_schedule.base_B},
              {"base_M", c.rho_schedule.base_M},
              {"tau0", c.rho_schedule.tau0},
              {"kappa", c.rho_schedule.kappa}};
  json problem = {{"name", c.problem.name},   {"n", c.problem.n},         {"dim", c.problem.dim},
                  {"data_seed", c.problem.data_seed}, {"noise", c.problem.noise}, {"scale", c.problem.scale},
                  {"l2", c.problem.l2},       {"rank", c.problem.rank},   {"rows", c.problem.rows}};
  json theory = {{"f0_minus_fstar", c.theory.f0_minus_fstar},
                 {"A", c.theory.A},
                 {"alpha", c.theory.alpha},
                 {"mu", c.theory.mu},
                 {"L", c.theory.L},
                 {"D", c.theory.D}};
  return {{"T", c.T},
          {"M", c.M},
          {"nW", c.nW},
          {"p", c.p},
          {"B", c.B},
          {"eta", c.eta},
          {"seed", c.seed},
          {"batch_size", c.batch_size},
          {"sim_grad_cost_us", c.sim_grad_cost_us},
          {"cost_mode", enum_name(c.cost_mode, kCostModes)},
          {"transport", enum_name(c.transport, kTransports)},
          {"ordering", enum_name(c.ordering, kOrderings)},
          {"metrics_every", c.metrics_every},
          {"trace_overwrites", c.trace_overwrites},
          {"delay", delay},
          {"rho_schedule", rho},
          {"problem", problem},
          {"theory", theory}};
}

json to_json(const ExperimentSpec& s) {
  json j = {{"base", to_json(s.base)},
            {"sweep", {{"nW", s.nW}, {"p", s.p}, {"B", s.B}, {"M", s.M}, {"T", s.T}}},
            {"reference", s.reference},
            {"rescale_rho", s.rescale_rho}};
  j["target_loss"] = s.target_loss ? json(*s.target_loss) : json(nullptr);
  return j;
}

json to_json(const SviSpec& s) {
  const auto& c = s.synthetic;
  return {{"run", to_json(s.run)},
          {"lda",
           {{"K", s.lda.K},
            {"zeta", s.lda.zeta},
            {"alpha_doc", s.lda.alpha_doc},
            {"tol", s.lda.tol},
            {"max_iters", s.lda.max_iters}}},
          {"corpus",
           {{"docword", s.docword},
            {"vocab", s.vocab},
            {"synthetic",
             {{"K", c.K},
              {"V", c.V},
              {"docs", c.docs},
              {"doc_length", c.doc_length},
              {"doc_alpha", c.doc_alpha},
              {"topic_concentration", c.topic_concentration},
              {"seed", c.seed}}}}},
          {"heldout_every", s.heldout_every},
          {"eval_every", s.eval_every},
          {"serial", s.serial}};
}

json to_json(const RlSpec& s) {
  const auto& e = s.rl.env;
  return {{"run", to_json(s.run)},
          {"rl",
           {{"t_max", s.rl.t_max},
            {"minibatch", s.rl.minibatch},
            {"max_env_steps", s.rl.max_env_steps},
            {"env",
             {{"rows", e.rows},
              {"cols", e.cols},
              {"start", e.start},
              {"goal", e.goal},
              {"step_reward", e.step_reward},
              {"goal_reward", e.goal_reward},
              {"gamma", e.gamma},
              {"max_episode_steps", e.max_episode_steps}}}}}};
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

}  // namespace dpsgd::bench
