#include "polystore/cli/session.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "polystore/analytics/workload.hpp"
#include "polystore/array/array_file.hpp"
#include "polystore/cli/bench.hpp"
#include "polystore/common/error.hpp"
#include "polystore/common/text.hpp"

namespace polystore::cli {

namespace {

using nlohmann::json;

std::string fmt_ms(double ms) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << ms;
  return s.str();
}

/// Left-aligned text table.
std::string aligned(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << r[i];
      if (i + 1 < r.size()) out << std::string(w[i] - r[i].size() + 2, ' ');
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : text::split(s, ',')) {
    const auto t = text::trim(part);
    if (t.empty()) continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(std::string(t), &used);
      if (used != t.size() || v == 0) throw std::invalid_argument("size");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, "bad size '" + std::string(t) + "'");
    }
  }
  if (out.empty()) throw Error(Errc::invalid_argument, "no sizes given");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  return in;
}

}  // namespace

Format parse_format(std::string_view s) {
  if (s == "table") return Format::table;
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw Error(Errc::invalid_argument, "unknown format '" + std::string(s) + "'");
}

void CliConfig::validate() const {
  if (!(stale_threshold >= 0)) throw Error(Errc::invalid_argument, "stale threshold must be >= 0");
  if (!monitor_store.empty()) {
    std::ofstream probe(monitor_store, std::ios::app);
    if (!probe) throw Error(Errc::io, "monitor store '" + monitor_store + "' is not writable");
  }
}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < line.size()) {
        cur += line[++i];
      } else {
        cur += c;
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < line.size()) {
      cur += line[++i];
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      if (in_word) words.push_back(std::move(cur));
      cur.clear();
      in_word = false;
    } else {
      cur += c;
      in_word = true;
    }
  }
  if (quote) throw Error(Errc::parse, "unterminated quote in command line");
  if (in_word) words.push_back(std::move(cur));
  return words;
}

Session::Session(CliConfig config, std::ostream& out, std::ostream& err)
    : config_(std::move(config)), out_(out), err_(err) {
  config_.validate();
  ps_ = std::make_unique<island::Polystore>();
  monitor_ = std::make_unique<mw::MonitorStore>(config_.monitor_store);
  mw::Config mc;
  mc.stale_threshold = config_.stale_threshold;
  mc.on_miss = config_.on_miss;
  mc.seed = config_.seed;
  mw_ = std::make_unique<mw::Middleware>(*ps_, *monitor_, mc);
}

Session::~Session() = default;

int Session::execute(const std::vector<std::string>& words) {
  try {
    dispatch(words);
    out_.flush();
    return 0;
  } catch (const std::exception& e) {
    out_.flush();
    err_ << "error: " << e.what() << '\n';
    return 1;
  }
}

int Session::shell(std::istream& in, bool prompt) {
  int status = 0;
  std::string line;
  for (;;) {
    if (prompt) out_ << "polystore> " << std::flush;
    if (!std::getline(in, line)) break;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> words;
    try {
      words = split_words(t);
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      status = 1;
      continue;
    }
    if (words[0] == "quit" || words[0] == "exit") break;
    if (execute(words) != 0) status = 1;
  }
  return status;
}

void Session::load_spec(std::string_view spec) {
  const auto first = spec.find(':');
  if (first == std::string_view::npos) throw Error(Errc::invalid_argument, "--load expects kind:path[:name]");
  const auto kind = std::string(spec.substr(0, first));
  auto rest = spec.substr(first + 1);
  std::string name;
  if (const auto last = rest.rfind(':'); last != std::string_view::npos) {
    name = std::string(rest.substr(last + 1));
    rest = rest.substr(0, last);
  }
  cmd_load(kind, std::string(rest), name);
}

void Session::dispatch(const std::vector<std::string>& words) {
  if (words.empty()) throw Error(Errc::invalid_argument, "no command given (try 'help')");
  const auto& cmd = words[0];
  const std::vector<std::string> args(words.begin() + 1, words.end());
  if (cmd == "load") {
    if (args.size() < 2 || args.size() > 3) throw Error(Errc::invalid_argument, "usage: load KIND PATH [NAME]");
    cmd_load(args[0], args[1], args.size() == 3 ? args[2] : "");
  } else if (cmd == "query") {
    bool training = false;
    std::string q;
    for (const auto& a : args) {
      if (a == "--training" && q.empty()) {
        training = true;
      } else {
        q += (q.empty() ? "" : " ") + a;
      }
    }
    if (q.empty()) throw Error(Errc::invalid_argument, "usage: query [--training] TEXT");
    cmd_query(q, training);
  } else if (cmd == "idle") {
    std::size_t budget = SIZE_MAX;
    if (!args.empty()) budget = parse_sizes(args[0]).front();
    cmd_idle(budget);
  } else if (cmd == "monitor-dump") {
    cmd_monitor_dump();
  } else if (cmd == "bench") {
    cmd_bench(args);
  } else if (cmd == "run") {
    if (args.size() != 1) throw Error(Errc::invalid_argument, "usage: run SCRIPT");
    cmd_run(args[0]);
  } else if (cmd == "shell") {
    if (shell(std::cin, true) != 0) throw Error(Errc::execution, "a shell command failed");
  } else if (cmd == "help") {
    cmd_help();
  } else {
    throw Error(Errc::invalid_argument, "unknown command '" + cmd + "' (try 'help')");
  }
}

void Session::say_loaded(std::size_t n, const std::string& unit, const std::string& into) {
  if (config_.format == Format::json) {
    out_ << json({{"loaded", n}, {"unit", unit + "s"}, {"into", into}}).dump() << '\n';
  } else {
    out_ << n << ' ' << unit << (n == 1 ? "" : "s") << " into " << into << '\n';
  }
}

void Session::cmd_load(const std::string& kind, const std::string& path, const std::string& name) {
  auto in = open_input(path);
  if (kind == "rel-csv") {
    const auto table = name.empty() ? std::filesystem::path(path).stem().string() : name;
    const auto n = ps_->load_csv(table, in);
    say_loaded(n, "row", table);
  } else if (kind == "array") {
    auto a = array::read_array(in);
    if (!name.empty()) a.rename(name);
    const auto label = a.name();
    const auto cells = a.cell_count();
    ps_->store_array(std::move(a), island::Engine::array);
    say_loaded(cells, "cell", label);
  } else if (kind == "kv-jsonl") {
    // Staged first, so a bad line leaves the live store untouched.
    kv::KvStore staged;
    const auto n = staged.load_jsonl(in);
    const auto prefix = name.empty() ? std::string() : name + "/";
    for (auto& d : staged.scan("")) ps_->kv().put(prefix + d.key, d.fields);
    say_loaded(n, "document", prefix.empty() ? "kv" : prefix);
  } else {
    throw Error(Errc::invalid_argument, "unknown load kind '" + kind + "' (rel-csv, array, kv-jsonl)");
  }
}

void Session::cmd_query(const std::string& text, bool training) {
  const auto r = mw_->run(text, training);
  if (config_.format == Format::json) {
    json runs = json::array();
    for (const auto& run : r.runs) {
      json steps = json::array();
      json step_ms = json::array();
      for (const auto& s : run.steps) {
        steps.push_back(s.description);
        step_ms.push_back(s.ms);
      }
      runs.push_back({{"plan", run.plan_id}, {"steps", steps}, {"timing", {{"elapsed_ms", run.elapsed_ms}, {"step_ms", step_ms}}}});
    }
    json j = {{"result", island::to_json(r.result)},
              {"phase", r.phase},
              {"chosen_plan", r.chosen_plan},
              {"monitor_hit", r.monitor_hit},
              {"queued", r.queued},
              {"signature", mw::to_json(r.signature)},
              {"runs", runs},
              {"timing", {{"divergence", r.divergence}, {"stale", r.stale}}}};
    out_ << j.dump() << '\n';
    return;
  }
  if (config_.format == Format::csv) {
    out_ << island::render_csv(r.result) << "\nplan,elapsed_ms\n";
    for (const auto& run : r.runs) out_ << run.plan_id << ',' << run.elapsed_ms << '\n';
    return;
  }
  out_ << island::render_table(r.result);
  out_ << "phase: " << r.phase << "  plan: " << r.chosen_plan << "  monitor " << (r.monitor_hit ? "hit" : "miss");
  if (r.stale) out_ << "  (stale: usage divergence " << r.divergence << ", retraining recommended)";
  out_ << '\n';
  std::vector<std::vector<std::string>> rows;
  for (const auto& run : r.runs) {
    rows.push_back({run.plan_id, fmt_ms(run.elapsed_ms), ""});
    for (const auto& s : run.steps) rows.push_back({"", fmt_ms(s.ms), s.description});
  }
  out_ << aligned({"plan", "elapsed_ms", "step"}, rows);
  if (r.queued) out_ << r.queued << (r.queued == 1 ? " plan" : " plans") << " queued for idle time\n";
}

void Session::cmd_idle(std::size_t budget) {
  const auto n = mw_->run_idle(budget);
  if (config_.format == Format::json) {
    out_ << json({{"executed", n}, {"remaining", mw_->queue_length()}}).dump() << '\n';
  } else {
    out_ << n << (n == 1 ? " plan" : " plans") << " executed\n";
  }
}

void Session::cmd_monitor_dump() {
  struct Group {
    mw::Signature sig;
    std::string query;
    std::size_t records = 0;
    std::size_t errors = 0;
    std::map<std::string, std::vector<double>> by_plan;
  };
  std::map<std::string, Group> groups;  // ordered by signature key
  for (const auto& r : monitor_->records()) {
    auto& g = groups[mw::to_json(r.signature).dump()];
    g.sig = r.signature;
    if (g.query.empty()) g.query = r.query;
    ++g.records;
    if (!r.error.empty()) {
      ++g.errors;
      continue;
    }
    g.by_plan[r.plan_id].push_back(r.elapsed_ms);
  }
  struct Line {
    std::string structure, query, plan;
    std::size_t runs;
    double min_ms, median_ms;
  };
  std::vector<Line> lines;
  json j = json::array();
  for (const auto& [key, g] : groups) {
    json plans = json::array();
    for (const auto& [plan, times] : g.by_plan) {
      const double mn = *std::min_element(times.begin(), times.end());
      const double md = median(times);
      lines.push_back({g.sig.structure, g.query, plan, times.size(), mn, md});
      plans.push_back({{"plan", plan}, {"runs", times.size()}, {"timing", {{"min_ms", mn}, {"median_ms", md}}}});
    }
    j.push_back({{"signature", mw::to_json(g.sig)}, {"query", g.query}, {"records", g.records},
                 {"errors", g.errors}, {"plans", plans}});
  }
  if (config_.format == Format::json) {
    out_ << j.dump() << '\n';
    return;
  }
  if (config_.format == Format::csv) {
    out_ << "signature,plan,runs,min_ms,median_ms\n";
    for (const auto& l : lines) out_ << l.structure << ',' << l.plan << ',' << l.runs << ',' << l.min_ms << ',' << l.median_ms << '\n';
    return;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& l : lines) {
    rows.push_back({l.structure, l.plan, std::to_string(l.runs), fmt_ms(l.min_ms), fmt_ms(l.median_ms), l.query});
  }
  out_ << aligned({"signature", "plan", "runs", "min_ms", "median_ms", "query"}, rows);
}

void Session::cmd_bench(const std::vector<std::string>& args) {
  CLI::App app("bench", "bench");
  std::string suite;
  std::string sizes;
  std::size_t reps = 3;
  analytics::WorkloadConfig wc;
  bool paper_scale = false;
  app.add_option("suite", suite)->required()->check(CLI::IsMember({"micro", "matmul", "overhead", "medical"}));
  app.add_option("--sizes", sizes, "comma-separated sizes");
  app.add_option("--reps", reps, "timed repetitions (median reported)");
  app.add_option("--n", wc.n_patients, "training patients");
  app.add_option("--length", wc.length, "signal length");
  app.add_option("--bins", wc.bins, "histogram bins per scale");
  app.add_option("--k", wc.k, "neighbours");
  app.add_flag("--paper-scale", paper_scale, "600 patients of length 16384");
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw Error(Errc::invalid_argument, std::string("bench: ") + e.what());
  }
  BenchOptions opt;
  opt.reps = reps;
  opt.seed = config_.seed.value_or(1);

  std::vector<BenchRow> rows;
  json extra;
  std::string extra_csv;
  if (suite == "micro") {
    rows = bench_micro(parse_sizes(sizes.empty() ? "1000,10000,100000,1000000" : sizes), opt);
  } else if (suite == "matmul") {
    double diff = 0;
    rows = bench_matmul(parse_sizes(sizes.empty() ? "64,128,200" : sizes), opt, &diff);
    extra = {{"max_relative_difference", diff}};
  } else if (suite == "overhead") {
    const auto o = bench_overhead(opt);
    rows = overhead_rows(o);
    extra_csv = overhead_table_csv(o);
    extra = json::array();
    for (const auto& x : o) {
      extra.push_back({{"case", x.case_name}, {"query", x.query},
                       {"timing", {{"direct_ms", x.direct_ms}, {"middleware_ms", x.middleware_ms},
                                   {"overhead_ms", x.overhead_ms()}, {"overhead_pct", x.overhead_pct()}}}});
    }
  } else {
    if (paper_scale) {
      wc.n_patients = 600;
      wc.length = 16384;
    }
    wc.seed = opt.seed;
    const auto cohort = analytics::gen_cohort(wc);
    std::vector<analytics::WorkloadResult> results;
    for (auto m : {analytics::Mode::array_only, analytics::Mode::relational_only, analytics::Mode::hybrid}) {
      results.push_back(analytics::run_workload(wc, cohort, m));
    }
    rows = medical_rows(wc, results);
    extra = analytics::summary_json(wc, results);
    std::ostringstream s;
    s << "mode,label,truth,total_ms\n";
    for (const auto& r : results) {
      s << analytics::mode_name(r.mode) << ',' << analytics::label_name(r.classification.label) << ','
        << analytics::label_name(r.truth) << ',' << r.total_ms << '\n';
    }
    extra_csv = s.str();
  }

  if (config_.format == Format::json) {
    out_ << json({{"suite", suite}, {"rows", bench_json(rows)}, {"detail", extra}}).dump() << '\n';
    return;
  }
  if (config_.format == Format::csv) {
    out_ << bench_csv(rows);
  } else {
    std::vector<std::vector<std::string>> t;
    for (const auto& r : rows) t.push_back({r.suite, r.case_name, r.engine_or_mode, std::to_string(r.size), fmt_ms(r.elapsed_ms)});
    out_ << aligned({"suite", "case", "engine_or_mode", "size", "elapsed_ms"}, t);
  }
  if (!extra_csv.empty()) out_ << '\n' << extra_csv;
  if (suite == "matmul") out_ << "\nmax relative difference between engines: " << extra["max_relative_difference"].get<double>() << '\n';
}

void Session::cmd_run(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      dispatch(split_words(t));
    } catch (const std::exception& e) {
      throw LineError(Errc::execution, lineno, e.what());
    }
  }
}

void Session::cmd_help() {
  out_ << "commands:\n"
          "  load rel-csv|array|kv-jsonl PATH [NAME]\n"
          "  query [--training] TEXT\n"
          "  idle [BUDGET]\n"
          "  monitor-dump\n"
          "  bench micro|matmul|overhead|medical [--sizes A,B] [--reps N] [--n N --length L --bins B --k K]"
          " [--paper-scale]\n"
          "  run SCRIPT\n"
          "  shell\n";
}

}  // namespace polystore::cli
