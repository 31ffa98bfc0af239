// suspflow: runs one experiment per subcommand from a config file plus overrides.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "suspflow/suspflow.h"

namespace {

const char* const kExperiments[] = {"transversality", "mixing", "spectrum", "correlations",
                                    "norms",          "genericity", "branches"};

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string format;
  std::string output;
  unsigned workers = 0;
};

int report_failure(sf_status status) {
  std::cerr << "suspflow: " << sf_last_error() << "\n";
  const std::string detail = sf_last_error_detail();
  if (detail != "null") std::cerr << "detail: " << detail << "\n";
  return sf_exit_code(status);
}

bool read_file(const std::string& path, std::string& out) {
  if (path == "-") {
    out.assign(std::istreambuf_iterator<char>(std::cin), {});
    return true;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  out.assign(std::istreambuf_iterator<char>(in), {});
  return true;
}

// Quoted literal for a string-valued config key.
std::string quoted(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += c;
  }
  return q + "\"";
}

std::string config_string(const sf_config* cfg, const char* key) {
  char* raw = nullptr;
  if (sf_config_get(cfg, key, &raw) != SF_OK) return "";
  std::string s = raw;
  sf_string_free(raw);
  if (s.size() >= 2 && s.front() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

unsigned workers_from_env() {
  const char* env = std::getenv("SUSPFLOW_WORKERS");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0 || v > 256) {
    std::cerr << "suspflow: ignoring SUSPFLOW_WORKERS='" << env << "' (expected 1..256)\n";
    return 0;
  }
  return static_cast<unsigned>(v);
}

int execute(const std::string& experiment, const Options& opt, bool check_only) {
  std::string text;
  if (!opt.config_path.empty() && !read_file(opt.config_path, text)) {
    std::cerr << "suspflow: cannot read '" << opt.config_path << "'\n";
    return 1;
  }
  std::vector<std::string> overrides;
  if (!experiment.empty()) overrides.push_back("experiment=" + experiment);
  overrides.insert(overrides.end(), opt.overrides.begin(), opt.overrides.end());
  if (!opt.format.empty()) overrides.push_back("format=" + quoted(opt.format));
  if (!opt.output.empty()) overrides.push_back("output=" + quoted(opt.output));
  std::vector<const char*> raw;
  for (const auto& o : overrides) raw.push_back(o.c_str());

  sf_config* cfg = nullptr;
  sf_status st = sf_config_parse_with(text.data(), text.size(), raw.data(), raw.size(), &cfg);
  if (st != SF_OK) return report_failure(st);

  if (check_only) {
    char* dump = nullptr;
    char* hash = nullptr;
    sf_config_dump(cfg, &dump);
    sf_config_hash(cfg, &hash);
    std::cout << dump << "\nconfig_hash " << hash << "\n";
    sf_string_free(dump);
    sf_string_free(hash);
    sf_config_free(cfg);
    return 0;
  }

  const std::string format = config_string(cfg, "format");
  const std::string output = config_string(cfg, "output");
  const unsigned workers = opt.workers > 0 ? opt.workers : workers_from_env();

  sf_report* report = nullptr;
  const sf_status run_status = sf_run(cfg, workers, &report);
  sf_config_free(cfg);
  if (report == nullptr) return report_failure(run_status);
  if (run_status != SF_OK) std::cerr << "suspflow: " << sf_last_error() << "\n";

  char* bytes = nullptr;
  size_t len = 0;
  st = sf_report_emit(report, format.c_str(), &bytes, &len);
  sf_report_free(report);
  if (st != SF_OK) return report_failure(st);

  int code = sf_exit_code(run_status);
  if (output.empty() || output == "-") {
    std::fwrite(bytes, 1, len, stdout);
  } else {
    std::ofstream out(output, std::ios::binary);
    out.write(bytes, static_cast<std::streamsize>(len));
    if (!out) {
      std::cerr << "suspflow: cannot write '" << output << "'\n";
      code = 1;
    }
  }
  sf_string_free(bytes);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Suspension semi-flow experiments over angle-multiplying maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sf_version()));
  Options opt;

  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("config", opt.config_path, "Config file ('-' reads stdin)");
    sub->add_option("--set,-s", opt.overrides, "Override a key, e.g. --set mixing.grid=8192")->take_all()->allow_extra_args(false);
    sub->add_option("--format,-f", opt.format, "json, jsonl or csv")
        ->check(CLI::IsMember({"json", "jsonl", "csv"}));
    sub->add_option("--output,-o", opt.output, "Write the report here instead of stdout");
    sub->add_option("--workers,-j", opt.workers, "Worker threads (default: SUSPFLOW_WORKERS or the config)")
        ->check(CLI::Range(1u, 256u));
  };

  for (const char* name : kExperiments) add_common(app.add_subcommand(name, std::string("Run the ") + name + " experiment"));
  auto* check = app.add_subcommand("check", "Validate a config and print its canonical echo and hash");
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  for (const char* name : kExperiments)
    if (app.got_subcommand(name)) return execute(name, opt, false);
  return execute("", opt, true);
}
