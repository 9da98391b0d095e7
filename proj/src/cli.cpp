#include "capgate/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"

#include "capgate/data_io.hpp"
#include "capgate/evaluation.hpp"
#include "capgate/metrics.hpp"
#include "capgate/optimizer.hpp"
#include "capgate/policies.hpp"
#include "capgate/report.hpp"
#include "capgate/server.hpp"

namespace capgate {

namespace {

struct DataArgs {
  std::vector<std::string> data;
  std::string val;
  std::string test;
  bool split = false;
  std::uint64_t split_seed = kDefaultSplitSeed;
};

struct WeightArgs {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
};

struct Slices {
  std::string id;
  ScoredDataset calibration;
  ScoredDataset evaluation;
};

std::string stem_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

void add_data_options(CLI::App* cmd, DataArgs& a, bool repeatable) {
  if (repeatable) {
    cmd->add_option("--data", a.data, "Scored CSV (score,label,group); split 50/20/30. Repeatable");
  } else {
    cmd->add_option("--data", a.data, "Scored CSV (score,label,group)")->expected(1);
  }
  cmd->add_option("--val", a.val, "Pre-split calibration (validation) CSV");
  cmd->add_option("--test", a.test, "Pre-split evaluation (test) CSV");
  cmd->add_option("--split-seed", a.split_seed, "Seed of the stratified split")->capture_default_str();
}

void add_weight_options(CLI::App* cmd, WeightArgs& w) {
  cmd->add_option("--alpha", w.alpha, "Safety weight on FNR")->capture_default_str();
  cmd->add_option("--beta", w.beta, "Efficiency weight on FPR")->capture_default_str();
  cmd->add_option("--gamma", w.gamma, "Equity weight on TPR disparity")->capture_default_str();
}

void check_step(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw Error(ErrorKind::InvalidArgument, "step must be in (0,1]");
}

// One calibration/evaluation pair. --data alone uses the file for both unless --split is given.
Slices single_slices(const DataArgs& a, std::ostream& err) {
  std::vector<std::string> warnings;
  auto warn = [&] {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    warnings.clear();
  };
  if (!a.val.empty() || !a.test.empty()) {
    if (a.val.empty() || a.test.empty() || !a.data.empty()) {
      throw Error(ErrorKind::InvalidArgument, "give either --data or both --val and --test");
    }
    auto val = load_csv(a.val, &warnings);
    auto test = load_csv(a.test, &warnings);
    warn();
    return {stem_of(a.val), std::move(val), std::move(test)};
  }
  if (a.data.size() != 1) throw Error(ErrorKind::InvalidArgument, "exactly one --data file is required");
  auto full = load_csv(a.data.front(), &warnings);
  warn();
  if (!a.split) return {stem_of(a.data.front()), full, full};
  auto s = stratified_split(full, kDefaultSplitFractions, a.split_seed);
  for (const auto& w : s.warnings) err << "warning: " << w << '\n';
  return {stem_of(a.data.front()), std::move(s.validation), std::move(s.test)};
}

std::vector<SweepInput> sweep_inputs(const DataArgs& a, const std::string& scorer, const std::string& dataset_id,
                                     std::ostream& err) {
  std::vector<SweepInput> inputs;
  std::vector<std::string> warnings;
  if (!a.val.empty() || !a.test.empty()) {
    if (a.val.empty() || a.test.empty()) throw Error(ErrorKind::InvalidArgument, "--val and --test go together");
    auto val = load_csv(a.val, &warnings);
    auto test = load_csv(a.test, &warnings);
    inputs.push_back({dataset_id.empty() ? stem_of(a.val) : dataset_id, scorer, std::move(val), std::move(test)});
  }
  for (const auto& path : a.data) {
    auto full = load_csv(path, &warnings);
    auto s = stratified_split(full, kDefaultSplitFractions, a.split_seed);
    warnings.insert(warnings.end(), s.warnings.begin(), s.warnings.end());
    inputs.push_back({stem_of(path), scorer, std::move(s.validation), std::move(s.test)});
  }
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (inputs.empty()) throw Error(ErrorKind::InvalidArgument, "no dataset given: use --data or --val/--test");
  return inputs;
}

std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value) {
  if (flag && flag->count() > 0) return flag_value;
  if (const char* env = std::getenv("CAPGATE_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorKind::InvalidArgument, "CAPGATE_SEED must be a nonnegative integer");
    }
    return v;
  }
  return flag_value;
}

class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorKind::Io, "cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void print_outcome_row(std::ostream& out, const PolicyOutcome& o) {
  out << std::left << std::setw(21) << to_string(o.policy) << std::right << std::setw(10)
      << (o.tau ? fmt(*o.tau) : std::string("random")) << std::setw(9) << fmt(o.confusion.recall)
      << std::setw(9) << fmt(o.confusion.fpr) << std::setw(11) << fmt(o.disparity.delta) << std::setw(11)
      << fmt(o.intervention_rate) << std::setw(9) << fmt(o.loss) << "  "
      << (o.feasible ? "feasible" : "INFEASIBLE") << (o.capacity_infeasible ? " (residual)" : "") << '\n';
}

void print_outcome_header(std::ostream& out) {
  out << std::left << std::setw(21) << "policy" << std::right << std::setw(10) << "tau" << std::setw(9)
      << "recall" << std::setw(9) << "fpr" << std::setw(11) << "disparity" << std::setw(11) << "rate"
      << std::setw(9) << "loss" << "  feasibility\n";
}

std::vector<double> parse_list(const std::string& text, const char* name) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorKind::InvalidArgument, std::string(name) + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be non-empty");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

ScoredDataset four_point_demo() {
  return ScoredDataset({0.1, 0.4, 0.6, 0.9}, {0, 0, 1, 1}, std::vector<std::string>{"A", "B", "A", "B"});
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliHooks& hooks) {
  CLI::App app{"capgate: capacity-feasible decision thresholds from risk scores"};
  app.name("capgate");
  app.require_subcommand(1);

  // deploy
  DataArgs deploy_data;
  WeightArgs deploy_w;
  double deploy_capacity = kDefaultCapacity;
  double deploy_step = kDefaultGridStep;
  std::string deploy_format = "text";
  auto* deploy_cmd = app.add_subcommand("deploy", "Select tau* = max(tau_free, tau(C)) and report test metrics");
  add_data_options(deploy_cmd, deploy_data, false);
  deploy_cmd->add_flag("--split", deploy_data.split, "Split --data 50/20/30 and calibrate on validation");
  add_weight_options(deploy_cmd, deploy_w);
  deploy_cmd->add_option("--capacity", deploy_capacity, "Maximum intervention fraction C")->capture_default_str();
  deploy_cmd->add_option("--step", deploy_step, "Threshold ladder step")->capture_default_str();
  deploy_cmd->add_option("--format", deploy_format)->check(CLI::IsMember({"text", "json"}));

  // baselines
  DataArgs base_data;
  WeightArgs base_w;
  double base_capacity = kDefaultCapacity;
  double base_step = kDefaultGridStep;
  double base_epsilon = 0.0;
  std::string base_metric = "f1";
  std::uint64_t base_seed = kDefaultSeed;
  std::string base_format = "text";
  auto* base_cmd = app.add_subcommand("baselines", "Evaluate every policy at a fixed capacity");
  add_data_options(base_cmd, base_data, false);
  base_cmd->add_flag("--split", base_data.split, "Split --data 50/20/30 and calibrate on validation");
  add_weight_options(base_cmd, base_w);
  base_cmd->add_option("--capacity", base_capacity)->capture_default_str();
  base_cmd->add_option("--step", base_step)->capture_default_str();
  base_cmd->add_option("--epsilon", base_epsilon, "Risk-averse FNR tolerance")->capture_default_str();
  base_cmd->add_option("--metric", base_metric)->check(CLI::IsMember({"f1", "balanced_accuracy"}));
  auto* base_seed_opt = base_cmd->add_option("--seed", base_seed, "Seed of the randomized comparators");
  base_cmd->add_option("--format", base_format)->check(CLI::IsMember({"text", "csv", "json"}));

  // sweep / ablate share one option block
  struct SweepArgs {
    DataArgs data;
    std::string dataset_id;
    std::string scorer = "given";
    std::string alphas = "1,2,3";
    std::string betas = "0.5,1,1.5";
    std::string gammas = "0.5,1,1.5,2";
    std::string capacities;
    std::size_t n_boot = kDefaultBootstrapResamples;
    std::uint64_t seed = kDefaultSeed;
    double step = kDefaultGridStep;
    unsigned threads = 0;
    std::string out;
    std::string format = "csv";
    CLI::Option* seed_opt = nullptr;
  };
  SweepArgs sweep_args, ablate_args;
  sweep_args.capacities = "0.25";
  ablate_args.capacities = join(kAblationCapacities);
  auto add_sweep_options = [](CLI::App* cmd, SweepArgs& s) {
    add_data_options(cmd, s.data, true);
    cmd->add_option("--dataset-id", s.dataset_id, "Name for the --val/--test pair");
    cmd->add_option("--scorer", s.scorer, "Scorer id recorded with each row")->capture_default_str();
    cmd->add_option("--alpha", s.alphas, "Comma-separated alpha grid")->capture_default_str();
    cmd->add_option("--beta", s.betas, "Comma-separated beta grid")->capture_default_str();
    cmd->add_option("--gamma", s.gammas, "Comma-separated gamma grid")->capture_default_str();
    cmd->add_option("--capacity", s.capacities, "Comma-separated capacities")->capture_default_str();
    cmd->add_option("--n-boot", s.n_boot, "Bootstrap resamples per cell (0 disables)")->capture_default_str();
    s.seed_opt = cmd->add_option("--seed", s.seed, "Master seed (env CAPGATE_SEED when absent)");
    cmd->add_option("--step", s.step)->capture_default_str();
    cmd->add_option("--threads", s.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--out", s.out, "Output file (default stdout)");
    cmd->add_option("--format", s.format)->check(CLI::IsMember({"csv", "json"}));
  };
  auto* sweep_cmd = app.add_subcommand("sweep", "Factorial weight sweep: calibrate on validation, evaluate on test");
  add_sweep_options(sweep_cmd, sweep_args);
  auto* ablate_cmd = app.add_subcommand("ablate", "Factorial sweep repeated over a capacity list");
  add_sweep_options(ablate_cmd, ablate_args);

  // synth
  std::string synth_sizes = "500,500";
  std::string synth_shapes = "2,8,8,2";
  std::string synth_groups;
  std::uint64_t synth_seed = kDefaultSeed;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a calibrated synthetic population");
  synth_cmd->add_option("--sizes", synth_sizes, "Group sizes, comma-separated")->capture_default_str();
  synth_cmd->add_option("--shapes", synth_shapes, "Beta shapes a1,b1,a2,b2,...")->capture_default_str();
  synth_cmd->add_option("--groups", synth_groups, "Group names, comma-separated (default A,B,...)");
  auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_out, "Output CSV (default stdout)");

  // split
  std::string split_data;
  std::uint64_t split_seed = kDefaultSplitSeed;
  std::string split_prefix;
  auto* split_cmd = app.add_subcommand("split", "Stratified 50/20/30 train/validation/test split");
  split_cmd->add_option("--data", split_data)->required();
  split_cmd->add_option("--seed", split_seed)->capture_default_str();
  split_cmd->add_option("--out-prefix", split_prefix, "Writes <prefix>_{train,validation,test}.csv");

  // score
  std::string score_features, score_out;
  double score_lr = 0.1;
  std::size_t score_iters = 1000;
  auto* score_cmd = app.add_subcommand("score", "Demo logistic scorer: features CSV -> scored CSV");
  score_cmd->add_option("--features", score_features, "CSV with label, group and numeric feature columns")
      ->required();
  score_cmd->add_option("--learning-rate", score_lr)->capture_default_str();
  score_cmd->add_option("--iterations", score_iters)->capture_default_str();
  score_cmd->add_option("--out", score_out, "Output CSV (default stdout)");

  // serve
  int serve_port = 8080;
  std::string serve_host = "0.0.0.0";
  std::vector<std::string> serve_data;
  bool serve_demo = false;
  double serve_step = kDefaultGridStep;
  std::string serve_cors = "*";
  std::uint64_t serve_seed = kDefaultSeed;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP JSON API");
  serve_cmd->add_option("--port", serve_port)->capture_default_str();
  serve_cmd->add_option("--host", serve_host)->capture_default_str();
  serve_cmd->add_option("--data", serve_data, "CSV to register (id = file stem), split 50/20/30. Repeatable");
  serve_cmd->add_flag("--demo", serve_demo, "Register the four-point 'demo' and a 1000-row 'synthetic' dataset");
  serve_cmd->add_option("--step", serve_step)->capture_default_str();
  serve_cmd->add_option("--cors-origin", serve_cors)->capture_default_str();
  auto* serve_seed_opt = serve_cmd->add_option("--seed", serve_seed, "Master seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (deploy_cmd->parsed()) {
      EthicalWeights w{deploy_w.alpha, deploy_w.beta, deploy_w.gamma};
      w.validate();
      const Capacity cap(deploy_capacity);
      check_step(deploy_step);
      const auto s = single_slices(deploy_data, err);
      const auto grid = default_grid(s.calibration, deploy_step);
      const auto d = deploy(s.calibration, grid, w, cap);
      const auto outcome = evaluate_policy(PolicySpec{PolicyId::ProposedFramework, {}}, s.calibration,
                                           s.evaluation, grid, w, cap);
      if (deploy_format == "json") {
        nlohmann::ordered_json j = to_json(d);
        j["capacity"] = cap.value();
        j["outcome"] = to_json(outcome);
        out << j.dump(2) << '\n';
      } else {
        out << "tau_free           " << format_double(d.tau_free) << '\n'
            << "tau_capacity       " << format_double(d.tau_capacity) << '\n'
            << "tau_star           " << format_double(d.tau_star) << '\n'
            << "critical_capacity  " << format_double(d.critical_capacity) << '\n'
            << "constraint_active  " << (d.constraint_active ? "true" : "false") << '\n'
            << "loss_at_tau_star   " << format_double(d.loss_at_tau_star) << '\n';
        if (d.capacity_infeasible) out << "warning: even tau = 1 exceeds capacity on the calibration data\n";
        out << '\n';
        print_outcome_header(out);
        print_outcome_row(out, outcome);
      }
      return kExitOk;
    }

    if (base_cmd->parsed()) {
      EthicalWeights w{base_w.alpha, base_w.beta, base_w.gamma};
      w.validate();
      const Capacity cap(base_capacity);
      check_step(base_step);
      PolicyParams params;
      params.epsilon = base_epsilon;
      params.metric = parse_performance_metric(base_metric);
      params.seed = resolve_seed(base_seed_opt, base_seed);
      const auto s = single_slices(base_data, err);
      const auto grid = default_grid(s.calibration, base_step);
      const auto rows = evaluate_all_policies(params, s.calibration, s.evaluation, grid, w, cap);
      if (base_format == "json") {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
          if (r.outcome) arr.push_back(to_json(*r.outcome));
          else arr.push_back({{"policy", std::string(to_string(r.policy))}, {"error", r.error}});
        }
        out << arr.dump(2) << '\n';
      } else if (base_format == "csv") {
        out << "policy,tau,recall,fpr,disparity,intervention_rate,loss,feasible,error\n";
        for (const auto& r : rows) {
          out << to_string(r.policy) << ',';
          if (!r.outcome) {
            out << ",,,,,,," << r.error << '\n';
            continue;
          }
          const auto& o = *r.outcome;
          out << (o.tau ? format_double(*o.tau) : "randomized") << ',' << format_double(o.confusion.recall) << ','
              << format_double(o.confusion.fpr) << ',' << format_double(o.disparity.delta) << ','
              << format_double(o.intervention_rate) << ',' << format_double(o.loss) << ','
              << (o.feasible ? "true" : "false") << ",\n";
        }
      } else {
        out << "capacity C = " << format_double(cap.value()) << "\n\n";
        print_outcome_header(out);
        for (const auto& r : rows) {
          if (r.outcome) print_outcome_row(out, *r.outcome);
          else out << std::left << std::setw(21) << to_string(r.policy) << "  n/a: " << r.error << '\n';
        }
      }
      return kExitOk;
    }

    for (auto [cmd, s] : {std::pair{sweep_cmd, &sweep_args}, std::pair{ablate_cmd, &ablate_args}}) {
      if (!cmd->parsed()) continue;
      SweepOptions opt;
      opt.weights.alphas = parse_list(s->alphas, "--alpha");
      opt.weights.betas = parse_list(s->betas, "--beta");
      opt.weights.gammas = parse_list(s->gammas, "--gamma");
      opt.capacities = parse_list(s->capacities, "--capacity");
      for (double c : opt.capacities) Capacity{c};
      for (double a : opt.weights.alphas)
        for (double b : opt.weights.betas)
          for (double g : opt.weights.gammas) EthicalWeights{a, b, g}.validate();
      opt.n_boot = s->n_boot;
      opt.seed = resolve_seed(s->seed_opt, s->seed);
      check_step(s->step);
      opt.grid_step = s->step;
      opt.threads = s->threads;
      const auto inputs = sweep_inputs(s->data, s->scorer, s->dataset_id, err);
      const auto records = factorial_sweep(inputs, opt);
      OutputSink sink(s->out, out);
      if (s->format == "json") {
        sink.stream() << to_json(records).dump() << '\n';
      } else {
        write_sweep_csv(sink.stream(), records);
      }
      if (cmd == ablate_cmd && !s->out.empty()) {
        out << "capacity  records  mean_recall  mean_disparity  activation\n";
        for (const auto& c : summarize_by_capacity(records)) {
          out << std::setw(8) << fmt(c.capacity, 2) << std::setw(9) << c.records << std::setw(13)
              << fmt(c.mean_recall, 3) << std::setw(16) << fmt(c.mean_disparity, 3) << std::setw(12)
              << fmt(100.0 * c.activation_rate, 1) << "%\n";
        }
      } else if (!s->out.empty()) {
        out << records.size() << " records, constraint activation " << fmt(100.0 * activation_rate(records), 1)
            << "%\n";
      }
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      const auto sizes = parse_list(synth_sizes, "--sizes");
      const auto shapes = parse_list(synth_shapes, "--shapes");
      if (shapes.size() != 2 * sizes.size()) {
        throw Error(ErrorKind::InvalidArgument, "--shapes needs two values per group in --sizes");
      }
      std::vector<std::string> names;
      if (!synth_groups.empty()) {
        std::stringstream ss(synth_groups);
        for (std::string n; std::getline(ss, n, ',');) names.push_back(n);
        if (names.size() != sizes.size()) throw Error(ErrorKind::InvalidArgument, "--groups must match --sizes");
      }
      SyntheticSpec spec;
      spec.seed = resolve_seed(synth_seed_opt, synth_seed);
      for (std::size_t g = 0; g < sizes.size(); ++g) {
        if (!(sizes[g] >= 1) || sizes[g] != std::floor(sizes[g])) {
          throw Error(ErrorKind::InvalidArgument, "--sizes must be positive integers");
        }
        spec.groups.push_back({names.empty() ? std::string(1, static_cast<char>('A' + g % 26)) : names[g],
                               static_cast<std::size_t>(sizes[g]), shapes[2 * g], shapes[2 * g + 1]});
      }
      const auto data = generate_synthetic(spec);
      OutputSink sink(synth_out, out);
      write_csv(sink.stream(), data);
      if (!synth_out.empty()) out << data.size() << " rows written to " << synth_out << '\n';
      return kExitOk;
    }

    if (split_cmd->parsed()) {
      std::vector<std::string> warnings;
      const auto full = load_csv(split_data, &warnings);
      const auto s = stratified_split(full, kDefaultSplitFractions, split_seed);
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      for (const auto& w : s.warnings) err << "warning: " << w << '\n';
      const auto prefix = split_prefix.empty()
                              ? (std::filesystem::path(split_data).parent_path() / stem_of(split_data)).string()
                              : split_prefix;
      save_csv(prefix + "_train.csv", s.train);
      save_csv(prefix + "_validation.csv", s.validation);
      save_csv(prefix + "_test.csv", s.test);
      out << "train " << s.train.size() << ", validation " << s.validation.size() << ", test " << s.test.size()
          << " -> " << prefix << "_{train,validation,test}.csv\n";
      return kExitOk;
    }

    if (score_cmd->parsed()) {
      std::ifstream in(score_features);
      if (!in) throw Error(ErrorKind::NotFound, "file not found: " + score_features);
      std::string line;
      if (!std::getline(in, line)) throw Error(ErrorKind::Schema, "schema error: missing header row");
      std::vector<std::string> header;
      {
        std::stringstream ss(line);
        for (std::string h; std::getline(ss, h, ',');) header.push_back(h);
      }
      const auto label_col = std::find(header.begin(), header.end(), "label") - header.begin();
      const auto group_col = std::find(header.begin(), header.end(), "group") - header.begin();
      if (label_col == static_cast<std::ptrdiff_t>(header.size()) ||
          group_col == static_cast<std::ptrdiff_t>(header.size())) {
        throw Error(ErrorKind::Schema, "schema error: features CSV needs label and group columns");
      }
      FeatureMatrix x;
      x.cols = header.size() - 2;
      std::vector<std::uint8_t> labels;
      std::vector<std::string> groups;
      while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::size_t c = 0;
        for (std::string f; std::getline(ss, f, ','); ++c) {
          if (!f.empty() && f.back() == '\r') f.pop_back();
          if (static_cast<std::ptrdiff_t>(c) == label_col) {
            if (f != "0" && f != "1") throw Error(ErrorKind::Label, "label error: label '" + f + "' is not 0 or 1");
            labels.push_back(f == "1" ? 1 : 0);
          } else if (static_cast<std::ptrdiff_t>(c) == group_col) {
            groups.push_back(f);
          } else {
            x.values.push_back(parse_list(f, "feature").front());
          }
        }
        ++x.rows;
        if (x.values.size() != x.rows * x.cols || labels.size() != x.rows || groups.size() != x.rows) {
          throw Error(ErrorKind::Schema, "schema error: ragged row " + std::to_string(x.rows));
        }
      }
      LogisticFitOptions fit;
      fit.learning_rate = score_lr;
      fit.iterations = score_iters;
      auto scores = demo_logistic_scorer(x, labels, fit);
      const ScoredDataset scored(std::move(scores), std::move(labels), groups);
      OutputSink sink(score_out, out);
      write_csv(sink.stream(), scored);
      return kExitOk;
    }

    if (serve_cmd->parsed()) {
      check_step(serve_step);
      ServiceConfig config;
      config.grid_step = serve_step;
      config.cors_origin = serve_cors;
      config.master_seed = resolve_seed(serve_seed_opt, serve_seed);
      ScenarioService service(config);
      for (const auto& path : serve_data) service.register_split(stem_of(path), load_csv(path), kDefaultSplitSeed);
      if (serve_demo) {
        const auto demo = four_point_demo();
        service.register_dataset("demo", demo, demo, demo);
        service.register_split("synthetic", generate_synthetic({{{"A", 500, 2.0, 4.0}, {"B", 500, 3.0, 4.0}}, 7}));
      }
      httplib::Server server;
      // httplib defaults to SO_REUSEPORT, which would let a second server share a busy port.
      server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
      });
      install_routes(server, service);
      if (!server.bind_to_port(serve_host, serve_port)) {
        err << "error: cannot bind " << serve_host << ':' << serve_port << " (port in use?)\n";
        return kExitRuntime;
      }
      err << "listening on http://" << serve_host << ':' << serve_port << '\n';
      if (hooks.on_server_ready) hooks.on_server_ready(server);
      return server.listen_after_bind() ? kExitOk : kExitRuntime;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Io:
      case ErrorKind::Runtime:
        return kExitRuntime;
      default:
        return kExitUsage;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace capgate
