#include "suspflow/suspflow.h"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "suspflow/ceiling.hpp"
#include "suspflow/dynamics.hpp"
#include "suspflow/experiment.hpp"

namespace ex = suspflow::experiment;

struct sf_config {
  ex::ExperimentConfig cfg;
};

struct sf_report {
  ex::RunReport report;
};

struct sf_ceiling {
  suspflow::ceiling::TrigPolynomial f;
};

namespace {

thread_local std::string last_message;
thread_local std::string last_detail = "null";

sf_status status_of(suspflow::ErrorCode code) {
  using suspflow::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return SF_INVALID_ARGUMENT;
    case ErrorCode::DomainViolation: return SF_DOMAIN_VIOLATION;
    case ErrorCode::ResourceLimit: return SF_RESOURCE_LIMIT;
    case ErrorCode::NumericalFailure: return SF_NUMERICAL_FAILURE;
    case ErrorCode::PreconditionViolation: return SF_PRECONDITION_VIOLATION;
    case ErrorCode::ParseError: return SF_PARSE_ERROR;
    case ErrorCode::ValidationError: return SF_VALIDATION_ERROR;
  }
  return SF_INTERNAL_ERROR;
}

sf_status record(sf_status status, const std::string& message, const std::string& detail = "null") {
  last_message = message;
  last_detail = detail;
  return status;
}

template <class Body>
sf_status guarded(Body&& body) {
  try {
    body();
    return SF_OK;
  } catch (const suspflow::Error& e) {
    return record(status_of(e.code()), e.what(), ex::dump_json(e.detail()));
  } catch (const std::bad_alloc&) {
    return record(SF_RESOURCE_LIMIT, "out of memory");
  } catch (const std::exception& e) {
    return record(SF_INTERNAL_ERROR, e.what());
  }
}

char* duplicate(const std::string& s, size_t* len = nullptr) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  if (len) *len = s.size();
  return out;
}

sf_status null_argument(const char* name) {
  return record(SF_INVALID_ARGUMENT, std::string(name) + " must not be null");
}

}  // namespace

extern "C" {

const char* sf_version(void) { return "0.1.0"; }
const char* sf_last_error(void) { return last_message.c_str(); }
const char* sf_last_error_detail(void) { return last_detail.c_str(); }

int sf_exit_code(sf_status status) {
  switch (status) {
    case SF_OK: return 0;
    case SF_RESOURCE_LIMIT: return 2;
    case SF_NUMERICAL_FAILURE: return 3;
    default: return 1;
  }
}

void sf_string_free(char* s) { std::free(s); }

static sf_status parse_impl(const char* text, size_t len, sf_config** out, bool validate) {
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  if (text == nullptr && len > 0) return null_argument("text");
  return guarded([&] {
    std::string src(text ? text : "", len);
    auto cfg = validate ? ex::parse_config(src) : ex::parse_config_text(src);
    *out = new sf_config{std::move(cfg)};
  });
}

sf_status sf_config_parse(const char* text, size_t len, sf_config** out) { return parse_impl(text, len, out, true); }
sf_status sf_config_parse_partial(const char* text, size_t len, sf_config** out) {
  return parse_impl(text, len, out, false);
}

sf_status sf_config_parse_with(const char* text, size_t len, const char* const* overrides, size_t n,
                               sf_config** out) {
  if (out == nullptr) return null_argument("out");
  *out = nullptr;
  if ((text == nullptr && len > 0) || (overrides == nullptr && n > 0)) return null_argument("text and overrides");
  return guarded([&] {
    std::vector<std::pair<std::string, std::string>> kv;
    for (size_t i = 0; i < n; ++i) {
      const std::string o = overrides[i] ? overrides[i] : "";
      const auto eq = o.find('=');
      if (eq == std::string::npos)
        suspflow::fail(suspflow::ErrorCode::InvalidArgument, "override '" + o + "' is not key=value");
      kv.emplace_back(o.substr(0, eq), o.substr(eq + 1));
    }
    *out = new sf_config{ex::parse_config(std::string(text ? text : "", len), kv)};
  });
}

sf_config* sf_config_default(void) {
  try {
    return new sf_config{};
  } catch (...) {
    return nullptr;
  }
}

sf_status sf_config_set(sf_config* cfg, const char* key, const char* literal) {
  if (!cfg || !key || !literal) return null_argument("cfg, key and literal");
  return guarded([&] { cfg->cfg.set_literal(key, literal); });
}

sf_status sf_config_validate(const sf_config* cfg) {
  if (!cfg) return null_argument("cfg");
  return guarded([&] { cfg->cfg.validate(); });
}

sf_status sf_config_get(const sf_config* cfg, const char* key, char** out) {
  if (!cfg || !key || !out) return null_argument("cfg, key and out");
  return guarded([&] { *out = duplicate(ex::dump_json(cfg->cfg.get(key))); });
}

sf_status sf_config_dump(const sf_config* cfg, char** out) {
  if (!cfg || !out) return null_argument("cfg and out");
  return guarded([&] { *out = duplicate(ex::dump_json(cfg->cfg.echo(), 2)); });
}

sf_status sf_config_hash(const sf_config* cfg, char** out) {
  if (!cfg || !out) return null_argument("cfg and out");
  return guarded([&] { *out = duplicate(cfg->cfg.hash()); });
}

void sf_config_free(sf_config* cfg) { delete cfg; }

sf_status sf_run(const sf_config* cfg, unsigned workers, sf_report** out) {
  if (!cfg || !out) return null_argument("cfg and out");
  *out = nullptr;
  sf_status status = SF_OK;
  const sf_status thrown = guarded([&] {
    suspflow::Exec exec;
    exec.workers = workers > 0 ? workers : cfg->cfg.tree()["workers"].get<unsigned>();
    auto report = ex::run(cfg->cfg, exec);
    if (!report.ok) {
      const auto& err = report.payload["error"];
      status = record(status_of(report.status), err["message"].get<std::string>(), ex::dump_json(err["detail"]));
    }
    *out = new sf_report{std::move(report)};
  });
  return thrown != SF_OK ? thrown : status;
}

sf_status sf_report_status(const sf_report* report) {
  if (!report) return null_argument("report");
  return report->report.ok ? SF_OK : status_of(report->report.status);
}

sf_status sf_report_emit(const sf_report* report, const char* format, char** out, size_t* len) {
  if (!report || !format || !out) return null_argument("report, format and out");
  return guarded([&] { *out = duplicate(ex::emit(report->report, format), len); });
}

void sf_report_free(sf_report* report) { delete report; }

sf_status sf_ceiling_create(int ell, double mean, const double* harmonics, size_t n_harmonics, sf_ceiling** out) {
  if (!out || (n_harmonics > 0 && !harmonics)) return null_argument("out and harmonics");
  *out = nullptr;
  return guarded([&] {
    std::vector<suspflow::ceiling::Harmonic> hs;
    for (size_t i = 0; i < n_harmonics; ++i) {
      const double k = harmonics[3 * i];
      if (k != static_cast<int>(k)) suspflow::fail(suspflow::ErrorCode::InvalidArgument, "harmonic index must be an integer");
      hs.push_back({static_cast<int>(k), harmonics[3 * i + 1], harmonics[3 * i + 2]});
    }
    *out = new sf_ceiling{{ell, mean, std::move(hs)}};
  });
}

sf_status sf_ceiling_eval(const sf_ceiling* f, double x, int order, double* out) {
  if (!f || !out) return null_argument("f and out");
  return guarded([&] { *out = f->f.eval(x, order); });
}

void sf_ceiling_free(sf_ceiling* f) { delete f; }

sf_status sf_time_t_map(const sf_ceiling* f, double x, double s, double t, double* out_x, double* out_s) {
  if (!f || !out_x || !out_s) return null_argument("f, out_x and out_s");
  return guarded([&] {
    const auto z = suspflow::dynamics::time_t_map(f->f, {x, s}, t);
    *out_x = z.x;
    *out_s = z.s;
  });
}

sf_status sf_branch_sum(const sf_ceiling* f, double x, double s, double t, size_t cap, size_t* count, double* sum) {
  if (!f || !count || !sum) return null_argument("f, count and sum");
  return guarded([&] {
    size_t n = 0;
    double acc = 0.0;
    const double ell = f->f.ell();
    suspflow::dynamics::for_each_branch(f->f, {x, s}, t, cap, [&](const std::vector<std::uint8_t>&, int level, double, double, double) {
      ++n;
      acc += std::pow(ell, -level);
    });
    *count = n;
    *sum = acc;
  });
}

}  // extern "C"
