#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polystore/island/polystore.hpp"
#include "polystore/middleware/middleware.hpp"

namespace polystore::cli {

enum class Format { table, csv, json };
Format parse_format(std::string_view s);

struct CliConfig {
  std::string monitor_store;  // empty keeps the monitor in memory
  std::optional<std::uint64_t> seed;
  mw::OnMiss on_miss = mw::OnMiss::random;
  double stale_threshold = 0.5;
  Format format = Format::table;

  void validate() const;  // throws invalid_argument
};

/// Shell-style splitting: whitespace separates words, single or double
/// quotes group them, backslash escapes the next character outside single
/// quotes.
std::vector<std::string> split_words(std::string_view line);

/// One polystore with its monitor and middleware, driven by text commands.
/// Both the batch entry point and the shell go through `execute`.
class Session {
 public:
  Session(CliConfig config, std::ostream& out, std::ostream& err);
  ~Session();

  /// Runs one command. Errors are printed as `error: ...`; the return value
  /// is the process exit code for that command.
  int execute(const std::vector<std::string>& words);

  /// Line-oriented shell; blank lines and `#` comments are skipped, `quit`
  /// ends it. Returns 0 when every command succeeded, else 1.
  int shell(std::istream& in, bool prompt);

  /// Loads `kind:path[:name]`, the form the --load flag takes.
  void load_spec(std::string_view spec);

  island::Polystore& polystore() { return *ps_; }
  mw::Middleware& middleware() { return *mw_; }
  mw::MonitorStore& monitor() { return *monitor_; }
  const CliConfig& config() const { return config_; }

 private:
  void dispatch(const std::vector<std::string>& words);
  void cmd_load(const std::string& kind, const std::string& path, const std::string& name);
  void say_loaded(std::size_t n, const std::string& unit, const std::string& into);
  void cmd_query(const std::string& text, bool training);
  void cmd_idle(std::size_t budget);
  void cmd_monitor_dump();
  void cmd_bench(const std::vector<std::string>& args);
  void cmd_run(const std::string& path);
  void cmd_help();

  CliConfig config_;
  std::ostream& out_;
  std::ostream& err_;
  std::unique_ptr<island::Polystore> ps_;
  std::unique_ptr<mw::MonitorStore> monitor_;
  std::unique_ptr<mw::Middleware> mw_;
};

}  // namespace polystore::cli
