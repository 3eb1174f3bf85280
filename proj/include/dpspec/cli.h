// Copyright 2026 The dpspec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The `dpspec` command line. RunCli is the whole program; main() only
// forwards argv and the standard streams, which keeps every command testable
// in-process.
//
//   dpspec plb --p 0.05 --b 11700
//   dpspec plb --rho 55.371 --delta 1e-10
//   dpspec swap --config c.json input.csv --seed 7 --out dir
//   dpspec verify --config c.json input.csv [--out dir]
//   dpspec verify --battery battery.json
//   dpspec game --scenario increase-delta [--config c.json input.csv]
//   dpspec reconstruct --config c.json tables.json [--truth truth.csv]
//   dpspec invariants --config c.json input.csv [--out dir]
//
// Exit codes: 0 success, 1 other failure, 2 usage, 3 enumeration cap
// exceeded, 4 verification failure.

#ifndef DPSPEC_CLI_H_
#define DPSPEC_CLI_H_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dpspec/divergences.h"
#include "dpspec/invariants.h"
#include "dpspec/io.h"
#include "dpspec/mechanisms.h"
#include "dpspec/reconstruct.h"
#include "dpspec/strata.h"
#include "dpspec/verifier.h"

namespace dpspec {

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitUsage = 2,
  kExitCapExceeded = 3,
  kExitVerificationFailed = 4,
};

namespace cli {

struct Options {
  std::string config;
  std::string input;
  std::optional<std::string> p;
  std::optional<uint64_t> b;
  std::optional<double> rho;
  std::optional<double> delta;
  std::optional<uint64_t> seed;
  std::string scenario;
  std::string out;
  std::string battery;
  std::string truth;
};

inline int CodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kResourceExhausted:
      return kExitCapExceeded;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
      return kExitUsage;
    default:
      return kExitError;
  }
}

class Runner {
 public:
  Runner(const Options& options, std::ostream& out, std::ostream& err)
      : opt_(options), out_(out), err_(err) {}

  int Fail(const absl::Status& status) {
    return Fail(CodeFor(status), status.message());
  }
  int Fail(int code, absl::string_view message) {
    err_ << "dpspec: " << message << "\n";
    return code;
  }

  // Loads --config (if any) and applies flag overrides.
  absl::StatusOr<RunConfig> LoadConfig() {
    Json j = Json::object();
    std::string base_dir;
    if (!opt_.config.empty()) {
      absl::StatusOr<std::string> text = ReadFile(opt_.config);
      if (!text.ok()) return text.status();
      absl::StatusOr<Json> parsed = ParseJson(*text, opt_.config);
      if (!parsed.ok()) return parsed.status();
      j = *std::move(parsed);
      base_dir = std::filesystem::path(opt_.config).parent_path().string();
    }
    if (!j.is_object()) {
      return absl::InvalidArgumentError("config must be a JSON object");
    }
    if (opt_.seed.has_value()) j["seed"] = *opt_.seed;
    if (opt_.p.has_value()) {
      if (!j.contains("mechanism")) j["mechanism"] = {{"kind", "psa"}};
      j["mechanism"]["p"] = *opt_.p;
    }
    absl::StatusOr<RunConfig> config = RunConfigFromJson(j, base_dir);
    if (!config.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(opt_.config.empty() ? "flags" : opt_.config, ": ",
                       config.status().message()));
    }
    return config;
  }

  absl::StatusOr<Dataset> LoadInput(const RunConfig& config) {
    if (config.schema == nullptr) {
      return absl::InvalidArgumentError("the config must define a schema");
    }
    std::string path = opt_.input.empty() ? config.input : opt_.input;
    if (path.empty()) {
      return absl::InvalidArgumentError(
          "no input CSV (pass a path or set \"input\" in the config)");
    }
    return LoadCsvDataset(config.schema, path);
  }

  absl::Status WriteReport(const std::string& file, const Json& report) {
    if (opt_.out.empty()) return absl::OkStatus();
    std::error_code ec;
    std::filesystem::create_directories(opt_.out, ec);
    if (ec) {
      return absl::PermissionDeniedError(
          absl::StrCat("cannot create '", opt_.out, "': ", ec.message()));
    }
    std::string path = absl::StrCat(opt_.out, "/", file);
    absl::Status s = WriteFile(path, report.dump(2) + "\n");
    if (s.ok()) out_ << "wrote " << path << "\n";
    return s;
  }

  int Plb() {
    const bool swap_form = opt_.p.has_value() || opt_.b.has_value();
    const bool zcdp_form = opt_.rho.has_value() || opt_.delta.has_value();
    if (swap_form == zcdp_form) {
      return Fail(kExitUsage, "plb needs either --p and --b, or --rho and --delta");
    }
    Json report = {{"report_schema", "dpspec.plb/1"}};
    RunConfig flags;
    if (swap_form) {
      if (!opt_.p.has_value() || !opt_.b.has_value()) {
        return Fail(kExitUsage, "plb needs both --p and --b");
      }
      absl::StatusOr<Rational> p = ParseRational(*opt_.p);
      if (!p.ok()) return Fail(kExitUsage, p.status().message());
      absl::StatusOr<LogValue> bound = PsaBudgetBound(*p, *opt_.b);
      if (!bound.ok()) return Fail(kExitUsage, bound.status().message());
      out_ << absl::StrFormat("%.10g\n", bound->ToDouble());
      flags.effective = {{"p", p->get_str()}, {"b", *opt_.b}};
      report["p"] = p->get_str();
      report["b"] = *opt_.b;
      report["epsilon_bound"] = LogValueJson(*bound);
    } else {
      if (!opt_.rho.has_value() || !opt_.delta.has_value()) {
        return Fail(kExitUsage, "plb needs both --rho and --delta");
      }
      absl::StatusOr<double> eps = ZcdpToApproxDp(*opt_.rho, *opt_.delta);
      if (!eps.ok()) return Fail(kExitUsage, eps.status().message());
      out_ << absl::StrFormat("%.10g\n", *eps);
      flags.effective = {{"rho", *opt_.rho}, {"delta", *opt_.delta}};
      report["rho"] = *opt_.rho;
      report["delta"] = *opt_.delta;
      report["epsilon"] = *eps;
    }
    report["manifest"] = ManifestJson("plb", flags);
    if (absl::Status s = WriteReport("plb.json", report); !s.ok()) return Fail(s);
    return kExitOk;
  }

  int Swap() {
    if (opt_.out.empty()) return Fail(kExitUsage, "swap needs --out DIR");
    absl::StatusOr<RunConfig> config = LoadConfig();
    if (!config.ok()) return Fail(config.status());
    if (!config->mechanism.has_value()) {
      return Fail(kExitUsage, "swap needs a mechanism (config or --p)");
    }
    absl::StatusOr<Dataset> x = LoadInput(*config);
    if (!x.ok()) return Fail(x.status());
    absl::StatusOr<Dataset> y = Sample(*config->mechanism, *x, config->seed);
    if (!y.ok()) return Fail(y.status());

    Json inv_report;
    if (absl::StatusOr<InvariantSpec> spec = DeriveInvariants(y->schema());
        spec.ok()) {
      inv_report = InvariantsReport(*y, EvaluateInvariants(*y, *spec), "swap",
                                    *config);
    } else {
      return Fail(spec.status());
    }
    std::error_code ec;
    std::filesystem::create_directories(opt_.out, ec);
    std::string csv_path = absl::StrCat(opt_.out, "/output.csv");
    if (absl::Status s = WriteFile(csv_path, SerializeCsv(DatasetToCsv(*y)));
        !s.ok()) {
      return Fail(s);
    }
    out_ << "wrote " << csv_path << "\n";
    if (absl::Status s = WriteReport("invariants.json", inv_report); !s.ok()) {
      return Fail(s);
    }
    size_t changed = 0;
    for (size_t i = 0; i < x->size(); ++i) {
      changed += x->record(i) != y->record(i) ? 1 : 0;
    }
    out_ << absl::StrFormat("%s: %d records, %d changed, seed %d\n",
                            MechanismName(*config->mechanism), x->size(),
                            changed, config->seed);
    return kExitOk;
  }

  int VerifyBattery() {
    uint64_t seed = kBatteryMasterSeed;
    uint64_t count = kBatterySize;
    absl::StatusOr<std::string> text = ReadFile(opt_.battery);
    if (!text.ok()) return Fail(text.status());
    absl::StatusOr<Json> j = ParseJson(*text, opt_.battery);
    if (!j.ok()) return Fail(j.status());
    if (absl::Status s = internal::RejectUnknownKeys(
            *j, {"master_seed", "count"}, "battery manifest");
        !s.ok()) {
      return Fail(s);
    }
    if (j->contains("master_seed")) {
      absl::StatusOr<uint64_t> v =
          internal::CountFromJson((*j)["master_seed"], "master_seed");
      if (!v.ok()) return Fail(v.status());
      seed = *v;
    }
    if (j->contains("count")) {
      absl::StatusOr<uint64_t> v = internal::CountFromJson((*j)["count"], "count");
      if (!v.ok()) return Fail(v.status());
      count = *v;
    }
    absl::StatusOr<BatteryResult> result = RunBattery(MakeBattery(seed, count));
    if (!result.ok()) return Fail(result.status());
    RunConfig manifest_config;
    manifest_config.effective = *j;
    manifest_config.seed = seed;
    Json report = ReportEnvelope("battery", "verify", manifest_config);
    report["battery"] = BatteryJson(*result);
    out_ << absl::StrFormat("battery: %d/%d instances within the bound, "
                            "min gap %.6g\n",
                            result->passed, result->instances, result->min_gap);
    for (size_t k = 0; k < result->reports.size(); ++k) {
      const PlbReport& r = result->reports[k];
      if (r.bound_holds) continue;
      out_ << absl::StrFormat(
          "  instance %d exceeds: n=%d b=%d p=%s eps=%s bound=%s\n", k, r.n,
          r.b, r.p.get_str(), r.epsilon_tight.ToString(),
          r.closed_form_bound.ToString());
    }
    if (absl::Status s = WriteReport("verify.json", report); !s.ok()) {
      return Fail(s);
    }
    return result->passed == result->instances ? kExitOk
                                               : kExitVerificationFailed;
  }

  int Verify() {
    if (!opt_.battery.empty()) return VerifyBattery();
    absl::StatusOr<RunConfig> config = LoadConfig();
    if (!config.ok()) return Fail(config.status());
    const Psa* psa =
        config->mechanism.has_value() ? std::get_if<Psa>(&*config->mechanism)
                                      : nullptr;
    if (psa == nullptr) {
      return Fail(kExitUsage, "verify checks the swapping mechanism: set "
                              "mechanism.kind to \"psa\" or pass --p");
    }
    if (!std::holds_alternative<Multiplicative>(config->premetric)) {
      return Fail(kExitUsage, "verify compares against a pure budget; "
                              "premetric.kind must be \"mult\"");
    }
    absl::StatusOr<Dataset> x = LoadInput(*config);
    if (!x.ok()) return Fail(x.status());
    absl::StatusOr<PlbReport> r = VerifyPsa(*x, psa->p, config->caps);
    if (!r.ok()) return Fail(r.status());
    Json report = ReportEnvelope("plb_report", "verify", *config);
    report["plb_report"] = PlbReportJson(*r);
    out_ << absl::StrFormat(
        "n=%d b=%d p=%s universe=%d\n"
        "epsilon_tight = %s (%s)\n"
        "closed-form bound = %s (%s)\n"
        "bound %s, gap %.6g%s\n",
        r->n, r->b, r->p.get_str(), r->universe_size,
        r->epsilon_tight.ToString(), r->epsilon_tight.ToDecimalString(),
        r->closed_form_bound.ToString(), r->closed_form_bound.ToDecimalString(),
        r->bound_holds ? "holds" : "EXCEEDED", r->gap,
        r->degenerate ? " (degenerate universe)" : "");
    if (absl::Status s = WriteReport("verify.json", report); !s.ok()) {
      return Fail(s);
    }
    return r->bound_holds ? kExitOk : kExitVerificationFailed;
  }

  int Game() {
    if (opt_.scenario.empty()) return Fail(kExitUsage, "game needs --scenario");
    absl::StatusOr<RunConfig> config = LoadConfig();
    if (!config.ok()) return Fail(config.status());
    const bool custom = config->schema != nullptr;

    if (opt_.scenario == "constant") {
      Dataset x = DefaultGamingInstance(GamingKind::kIncreaseDelta).x;
      if (custom) {
        absl::StatusOr<Dataset> loaded = LoadInput(*config);
        if (!loaded.ok()) return Fail(loaded.status());
        x = *std::move(loaded);
      }
      absl::StatusOr<ConstantParadox> c = RunConstantParadox(x, config->caps);
      if (!c.ok()) return Fail(c.status());
      Json report = ReportEnvelope("gaming", "game", *config);
      report["gaming"] = ConstantParadoxJson(*c);
      out_ << absl::StrFormat(
          "constant (unrelated dataset):    epsilon_tight = %s\n"
          "constant (confidential dataset): epsilon_tight = %s\n%s\n",
          c->epsilon_unrelated.ToString(), c->epsilon_confidential.ToString(),
          c->note);
      if (absl::Status s = WriteReport("game.json", report); !s.ok()) {
        return Fail(s);
      }
      return c->epsilon_unrelated.is_zero() && c->epsilon_confidential.is_zero()
                 ? kExitOk
                 : kExitVerificationFailed;
    }

    absl::StatusOr<GamingKind> kind = ParseGamingKind(opt_.scenario);
    if (!kind.ok()) {
      return Fail(kExitUsage,
                  absl::StrCat(kind.status().message(),
                               " (expected refine-strata, increase-delta, "
                               "refine-granularity, add-invariants or constant)"));
    }
    GamingInstance instance = DefaultGamingInstance(*kind);
    if (custom) {
      absl::StatusOr<Dataset> loaded = LoadInput(*config);
      if (!loaded.ok()) return Fail(loaded.status());
      instance.x = *std::move(loaded);
      if (config->mechanism.has_value()) {
        const Psa* psa = std::get_if<Psa>(&*config->mechanism);
        if (psa == nullptr) {
          return Fail(kExitUsage, "gaming scenarios use mechanism \"psa\"");
        }
        instance.p = psa->p;
      }
      instance.refine_variable.clear();
      const Schema& schema = instance.x.schema();
      for (size_t v : schema.holding_indices()) {
        if (std::find(schema.matching_indices().begin(),
                      schema.matching_indices().end(),
                      v) == schema.matching_indices().end()) {
          instance.refine_variable = instance.x.schema().variable(v).name;
          break;
        }
      }
    }
    absl::StatusOr<GamingScenario> s =
        RunGamingScenario(*kind, instance, config->caps);
    if (!s.ok()) return Fail(s.status());
    Json report = ReportEnvelope("gaming", "game", *config);
    report["gaming"] = GamingScenarioJson(*s);
    out_ << "scenario " << GamingKindName(s->kind) << "\n";
    for (const GamingStep& step : s->steps) {
      out_ << absl::StrFormat("  %-28s nominal %-14s tight %-14s universe %d\n",
                              step.label, step.nominal_epsilon.ToDecimalString(),
                              step.epsilon_tight.ToDecimalString(),
                              step.universe_size);
    }
    out_ << "  output distributions "
         << (s->distributions_identical ? "identical" : "CHANGED")
         << ", nominal budget "
         << (s->nominal_strictly_decreasing ? "strictly decreasing"
                                            : "NOT strictly decreasing")
         << "\n";
    if (absl::Status st = WriteReport("game.json", report); !st.ok()) {
      return Fail(st);
    }
    return s->distributions_identical && s->nominal_strictly_decreasing
               ? kExitOk
               : kExitVerificationFailed;
  }

  int ReconstructCommand() {
    absl::StatusOr<RunConfig> config = LoadConfig();
    if (!config.ok()) return Fail(config.status());
    if (config->schema == nullptr) {
      return Fail(kExitUsage, "reconstruct needs a schema in the config");
    }
    std::string tables_path = opt_.input.empty() ? config->tables : opt_.input;
    if (tables_path.empty()) {
      return Fail(kExitUsage, "reconstruct needs a tables JSON path");
    }
    absl::StatusOr<std::string> text = ReadFile(tables_path);
    if (!text.ok()) return Fail(text.status());
    absl::StatusOr<Json> j = ParseJson(*text, tables_path);
    if (!j.ok()) return Fail(j.status());
    absl::StatusOr<PublishedTables> tables =
        PublishedTablesFromJson(*j, *config->schema);
    if (!tables.ok()) {
      return Fail(absl::InvalidArgumentError(
          absl::StrCat(tables_path, ": ", tables.status().message())));
    }
    absl::StatusOr<ReconstructionResult> r =
        Reconstruct(*config->schema, *tables, config->caps.max_multisets);
    if (!r.ok()) return Fail(r.status());

    std::optional<AgreementScore> agreement;
    std::string truth_path = opt_.truth.empty() ? config->truth : opt_.truth;
    if (!truth_path.empty()) {
      absl::StatusOr<Dataset> truth = LoadCsvDataset(config->schema, truth_path);
      if (!truth.ok()) return Fail(truth.status());
      absl::StatusOr<AgreementScore> a = ScoreAgreement(*r, *truth);
      if (!a.ok()) return Fail(a.status());
      agreement = *a;
    }
    Json report = ReportEnvelope("reconstruction", "reconstruct", *config);
    report["reconstruction"] = ReconstructionJson(*config->schema, *r, agreement);
    out_ << absl::StrFormat("%d consistent multisets (%d candidates scanned)\n",
                            r->count(), r->candidates_scanned);
    if (agreement.has_value()) {
      out_ << absl::StrFormat("agreement: best %.10g, expected %.10g (%s)\n",
                              agreement->best.get_d(),
                              agreement->expected.get_d(),
                              agreement->expected.get_str());
    }
    if (absl::Status s = WriteReport("reconstruct.json", report); !s.ok()) {
      return Fail(s);
    }
    return kExitOk;
  }

  int Invariants() {
    absl::StatusOr<RunConfig> config = LoadConfig();
    if (!config.ok()) return Fail(config.status());
    absl::StatusOr<Dataset> x = LoadInput(*config);
    if (!x.ok()) return Fail(x.status());
    absl::StatusOr<InvariantSpec> spec = DeriveInvariants(x->schema());
    if (!spec.ok()) return Fail(spec.status());
    InvariantValue value = EvaluateInvariants(*x, *spec);
    out_ << value.Serialize();
    if (absl::Status s =
            WriteReport("invariants.json",
                        InvariantsReport(*x, value, "invariants", *config));
        !s.ok()) {
      return Fail(s);
    }
    return kExitOk;
  }

 private:
  const Options& opt_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace cli

inline int RunCli(int argc, const char* const* argv, std::ostream& out,
                  std::ostream& err) {
  CLI::App app{"Exact privacy-loss accounting for record swapping"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  cli::Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration");
    sub->add_option("--seed", opt.seed, "RNG seed (overrides config)");
    sub->add_option("--out", opt.out, "directory for JSON reports");
  };

  CLI::App* plb = app.add_subcommand("plb", "closed-form budget or zCDP conversion");
  plb->add_option("--p", opt.p, "swap rate in (0, 1)");
  plb->add_option("--b", opt.b, "largest matching-group size");
  plb->add_option("--rho", opt.rho, "zCDP parameter");
  plb->add_option("--delta", opt.delta, "target delta");
  plb->add_option("--out", opt.out, "directory for the JSON report");

  CLI::App* swap = app.add_subcommand("swap", "run a mechanism on microdata");
  common(swap);
  swap->add_option("input", opt.input, "microdata CSV");
  swap->add_option("--p", opt.p, "swap rate (overrides config)");

  CLI::App* verify =
      app.add_subcommand("verify", "tight budget versus the closed-form bound");
  common(verify);
  verify->add_option("input", opt.input, "microdata CSV");
  verify->add_option("--p", opt.p, "swap rate (overrides config)");
  verify->add_option("--battery", opt.battery, "battery manifest JSON");

  CLI::App* game = app.add_subcommand("game", "budget-gaming demonstrations");
  common(game);
  game->add_option("input", opt.input, "microdata CSV for a custom instance");
  game->add_option("--scenario", opt.scenario,
                   "refine-strata | increase-delta | refine-granularity | "
                   "add-invariants | constant");
  game->add_option("--p", opt.p, "swap rate (overrides config)");

  CLI::App* recon =
      app.add_subcommand("reconstruct", "enumerate microdata matching tables");
  common(recon);
  recon->add_option("tables", opt.input, "published tables JSON");
  recon->add_option("--truth", opt.truth, "ground-truth CSV for scoring");

  CLI::App* inv = app.add_subcommand("invariants", "evaluate swap invariants");
  common(inv);
  inv->add_option("input", opt.input, "microdata CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  cli::Runner runner(opt, out, err);
  if (plb->parsed()) return runner.Plb();
  if (swap->parsed()) return runner.Swap();
  if (verify->parsed()) return runner.Verify();
  if (game->parsed()) return runner.Game();
  if (recon->parsed()) return runner.ReconstructCommand();
  if (inv->parsed()) return runner.Invariants();
  return kExitUsage;
}

}  // namespace dpspec

#endif  // DPSPEC_CLI_H_
