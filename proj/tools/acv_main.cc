// Copyright 2026 The ACV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// acv: instrument, run, report and fuzz smali programs.
//
// Exit codes: 0 ok, 1 input error, 2 verify or instrumentation failure,
// 3 resource limit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "acv/corpus.h"
#include "acv/coverage.h"
#include "acv/fuzz.h"
#include "acv/instrumenter.h"
#include "acv/interpreter.h"
#include "acv/smali_parser.h"
#include "acv/strings.h"
#include "acv/verifier.h"

namespace fs = std::filesystem;

namespace acv {
namespace {

enum Exit { kOk = 0, kInputError = 1, kVerifyError = 2, kLimitError = 3 };

constexpr char kProbeMapFile[] = "acv.probemap.json";

int Fail(int code, std::string_view msg) {
  std::cerr << "acv: " << msg << "\n";
  return code;
}

int FailStatus(int code, const absl::Status& s) { return Fail(code, std::string(s.message())); }

int ExitFor(const absl::Status& s) {
  if (IsLimitError(s)) return kLimitError;
  if (s.code() == absl::StatusCode::kFailedPrecondition ||
      s.code() == absl::StatusCode::kResourceExhausted) {
    return kVerifyError;
  }
  return kInputError;
}

absl::StatusOr<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(StrCat("cannot read ", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status WriteFile(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) return absl::UnavailableError(StrCat("cannot write ", path.string()));
  return absl::OkStatus();
}

// Parses a smali tree; diagnostics go to stderr. Returns an exit code on
// failure.
std::variant<SmaliProgram, int> LoadTree(const fs::path& dir) {
  auto files = ReadSmaliTree(dir);
  if (!files.ok()) return FailStatus(kInputError, files.status());
  if (files->empty()) return Fail(kInputError, StrCat(dir.string(), ": no smali files"));
  ParseResult parsed = Parse(*files);
  for (const ParseDiagnostic& d : parsed.diagnostics) std::cerr << FormatDiagnostic(d) << "\n";
  if (!parsed.ok()) return kInputError;
  return *std::move(parsed.program);
}

bool ReportViolations(const VerificationResult& v, std::string_view what) {
  if (v.ok()) return true;
  std::cerr << "acv: " << what << " does not verify\n";
  for (const Violation& x : v.violations) std::cerr << "  " << FormatViolation(x) << "\n";
  return false;
}

struct InstrumentOutcome {
  int code = kOk;
  InflationStats stats;
  std::string error;
};

InstrumentOutcome InstrumentTree(const fs::path& in, const fs::path& out, Granularity g) {
  InstrumentOutcome r;
  auto loaded = LoadTree(in);
  if (std::holds_alternative<int>(loaded)) return {std::get<int>(loaded), {}, "parse failed"};
  const SmaliProgram& program = std::get<SmaliProgram>(loaded);
  VerificationResult v = Verify(program);
  if (!ReportViolations(v, in.string())) return {kVerifyError, {}, "input does not verify"};
  auto inst = Instrument(program, g);
  if (!inst.ok()) {
    std::cerr << "acv: " << in.string() << ": " << inst.status().message() << "\n";
    // FrameOverflow is an instrumentation failure; inputs that are already
    // instrumented are input errors.
    int code = inst.status().code() == absl::StatusCode::kResourceExhausted ? kVerifyError
                                                                            : kInputError;
    return {code, {}, std::string(inst.status().message())};
  }
  if (!ReportViolations(Verify(inst->program), "instrumented output")) {
    return {kVerifyError, {}, "instrumented output does not verify"};
  }
  if (absl::Status s = WriteSmaliTree(inst->program, out); !s.ok()) {
    return {kInputError, {}, std::string(s.message())};
  }
  if (absl::Status s = WriteFile(out / kProbeMapFile, ProbeMapToJson(inst->probe_map)); !s.ok()) {
    return {kInputError, {}, std::string(s.message())};
  }
  r.stats = Inflation(program, inst->program);
  return r;
}

struct InstrumentArgs {
  std::string in, out;
  std::string granularity = "instruction";
  bool batch = false;
};

int CmdInstrument(const InstrumentArgs& a) {
  auto g = ParseGranularity(a.granularity);
  if (!g) return Fail(kInputError, StrCat("unknown granularity '", a.granularity, "'"));
  if (!a.batch) {
    InstrumentOutcome r = InstrumentTree(a.in, a.out, *g);
    if (r.code != kOk) return r.code;
    std::cout << fmt::format("instructions {} -> {} ({:.3f}x)\n", r.stats.original_instructions,
                             r.stats.instrumented_instructions, r.stats.ratio);
    return kOk;
  }
  std::vector<fs::path> programs;
  for (const auto& e : fs::directory_iterator(a.in)) {
    if (e.is_directory()) programs.push_back(e.path());
  }
  std::sort(programs.begin(), programs.end());
  if (programs.empty()) return Fail(kInputError, StrCat(a.in, ": no program directories"));
  std::vector<InstrumentOutcome> results(programs.size());
#pragma omp parallel for schedule(dynamic)
  for (size_t i = 0; i < programs.size(); ++i) {
    results[i] = InstrumentTree(programs[i], fs::path(a.out) / programs[i].filename(), *g);
  }
  int ok = 0;
  double ratio_sum = 0;
  for (size_t i = 0; i < programs.size(); ++i) {
    if (results[i].code == kOk) {
      ++ok;
      ratio_sum += results[i].stats.ratio;
    } else {
      std::cerr << programs[i].filename().string() << ": " << results[i].error << "\n";
    }
  }
  std::cout << fmt::format("instrumented {}/{} ({:.1f}%), mean inflation {:.3f}x\n", ok,
                           programs.size(), 100.0 * ok / programs.size(),
                           ok > 0 ? ratio_sum / ok : 0.0);
  return ok == static_cast<int>(programs.size()) ? kOk : kVerifyError;
}

struct RunArgs {
  std::string dir, entry, out, crash_log;
  int64_t step_limit = Limits{}.max_steps;
};

int CmdRun(const RunArgs& a) {
  auto loaded = LoadTree(a.dir);
  if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
  const SmaliProgram& program = std::get<SmaliProgram>(loaded);
  auto text = ReadFile(a.entry);
  if (!text.ok()) return FailStatus(kInputError, text.status());
  auto script = ParseScript(*text);
  if (!script.ok()) return FailStatus(kInputError, script.status());

  std::optional<ProbeMap> map;
  if (IsInstrumented(program)) {
    auto json = ReadFile(fs::path(a.dir) / kProbeMapFile);
    if (!json.ok()) return FailStatus(kInputError, json.status());
    auto parsed = ProbeMapFromJson(*json);
    if (!parsed.ok()) return FailStatus(kInputError, parsed.status());
    map = *std::move(parsed);
  }
  auto linked = Link(program);
  if (!linked.ok()) return FailStatus(kVerifyError, linked.status());
  Limits limits;
  limits.max_steps = a.step_limit;
  auto vm = Vm::Create(*linked, limits);
  if (!vm.ok()) return FailStatus(ExitFor(vm.status()), vm.status());

  const fs::path acvr = a.out.empty() ? fs::path("acv.acvr") : fs::path(a.out);
  const fs::path log = a.crash_log.empty() ? fs::path(acvr.string() + ".crashes.jsonl")
                                           : fs::path(a.crash_log);
  if (acvr.has_parent_path()) fs::create_directories(acvr.parent_path());
  absl::Status flush_status;
  auto flush = [&] {
    if (!map) return;
    auto runtime = CollectRuntime(**vm, *map);
    flush_status = runtime.ok() ? WriteRuntime(*runtime, acvr) : runtime.status();
  };
  ScriptOutcome outcome = RunScript(**vm, *script, flush);
  flush();
  std::string crashes;
  for (const CrashRecord& c : outcome.crashes) StrAppend(&crashes, CrashToJson(c), "\n");
  if (absl::Status s = WriteFile(log, crashes); !s.ok()) return FailStatus(kInputError, s);
  if (!flush_status.ok()) return FailStatus(kInputError, flush_status);
  std::cout << fmt::format("calls {}, crashes {}\n", outcome.calls.size(), outcome.crashes.size());
  if (!outcome.status.ok()) return FailStatus(ExitFor(outcome.status), outcome.status);
  return kOk;
}

struct ReportArgs {
  std::string probe_map;
  std::vector<std::string> acvr;
  std::string out = "acv-report";
  std::string format = "xml,html";
  std::string source;
};

int CmdReport(const ReportArgs& a) {
  if (a.acvr.empty()) return Fail(kInputError, "no .acvr files given");
  auto json = ReadFile(a.probe_map);
  if (!json.ok()) return FailStatus(kInputError, json.status());
  auto map = ProbeMapFromJson(*json);
  if (!map.ok()) return FailStatus(kInputError, map.status());
  std::vector<RuntimeReport> runs;
  for (const std::string& path : a.acvr) {
    auto r = ReadRuntime(path);
    if (!r.ok()) return Fail(kInputError, StrCat(path, ": ", r.status().message()));
    runs.push_back(*std::move(r));
  }
  auto merged = Merge(runs);
  if (!merged.ok()) return FailStatus(kInputError, merged.status());
  auto report = Compute(*map, *merged);
  if (!report.ok()) return FailStatus(kInputError, report.status());

  bool xml = false, html = false;
  for (std::string_view f : Split(a.format, ",", true)) {
    if (f == "xml") {
      xml = true;
    } else if (f == "html") {
      html = true;
    } else {
      return Fail(kInputError, StrCat("unknown format '", f, "'"));
    }
  }
  std::optional<SmaliProgram> original;
  if (!a.source.empty()) {
    auto loaded = LoadTree(a.source);
    if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
    original = std::get<SmaliProgram>(std::move(loaded));
  }
  const fs::path out(a.out);
  if (xml) {
    if (absl::Status s = WriteFile(out / "acv.xml", EmitXml(*report)); !s.ok()) {
      return FailStatus(kInputError, s);
    }
  }
  if (html) {
    absl::Status s = EmitHtml(*report, original ? &*original : nullptr, out / "html");
    if (!s.ok()) return FailStatus(kInputError, s);
  }
  std::cout << FormatSummary(*report);
  return kOk;
}

struct FuzzArgs {
  uint64_t corpus_seed = 1;
  int programs = 50;
  std::string modes = "instruction,method,class,none";
  uint64_t seed = 1;
  int seeds = 30;
  int budget = 200;
  std::string out = "acv-fuzz";
  bool serial = false;
};

int CmdFuzz(const FuzzArgs& a) {
  if (a.programs < 1) return Fail(kInputError, "--programs must be at least 1");
  CampaignConfig config;
  config.modes.clear();
  for (std::string_view m : Split(a.modes, ",", true)) {
    auto mode = ParseFitnessMode(m);
    if (!mode.ok()) return FailStatus(kInputError, mode.status());
    config.modes.push_back(*mode);
  }
  for (int i = 0; i < a.seeds; ++i) config.seeds.push_back(a.seed + i);
  config.search.budget = a.budget;
  std::vector<FaultCorpusProgram> corpus = GenerateCorpus(a.corpus_seed, a.programs);
  auto result = a.serial ? RunCampaignSerial(corpus, config) : RunCampaign(corpus, config);
  if (!result.ok()) return FailStatus(ExitFor(result.status()), result.status());
  const fs::path out(a.out);
  for (auto [name, text] : {std::pair{"campaign.csv", CampaignCsv(*result)},
                            std::pair{"campaign.json", CampaignJson(*result)}}) {
    if (absl::Status s = WriteFile(out / name, text); !s.ok()) return FailStatus(kInputError, s);
  }
  std::cout << CampaignCsv(*result);
  for (const auto& [mask, count] : result->overlap) {
    std::cout << fmt::format("only {}: {}\n", OverlapLabel(*result, mask), count);
  }
  return kOk;
}

struct GenArgs {
  uint64_t seed = 1;
  int programs = 10;
  std::string out = "corpus";
};

int CmdGenCorpus(const GenArgs& a) {
  const fs::path out(a.out);
  for (const FaultCorpusProgram& p : GenerateCorpus(a.seed, a.programs)) {
    for (const SourceFile& f : p.sources) {
      if (absl::Status s = WriteFile(out / f.path, f.text); !s.ok()) return FailStatus(kInputError, s);
    }
    const fs::path meta = out / p.name;
    if (absl::Status s = WriteFile(meta / "faults.json", FaultsToJson(p)); !s.ok()) {
      return FailStatus(kInputError, s);
    }
    for (size_t k = 0; k < p.faults.size(); ++k) {
      absl::Status s = WriteFile(meta / fmt::format("witness{}.script", k), FormatScript(p.faults[k].witness));
      if (!s.ok()) return FailStatus(kInputError, s);
    }
  }
  std::cout << fmt::format("wrote {} programs to {}\n", a.programs, a.out);
  return kOk;
}

int CmdVerify(const std::string& dir) {
  auto loaded = LoadTree(dir);
  if (std::holds_alternative<int>(loaded)) return std::get<int>(loaded);
  VerificationResult v = Verify(std::get<SmaliProgram>(loaded));
  for (const Violation& w : v.warnings) std::cerr << "warning: " << FormatViolation(w) << "\n";
  if (!ReportViolations(v, dir)) return kVerifyError;
  std::cout << "ok\n";
  return kOk;
}

}  // namespace
}  // namespace acv

int main(int argc, char** argv) {
  using namespace acv;
  CLI::App app{"acv: coverage instrumentation for smali programs"};
  app.require_subcommand(1);
  const std::set<std::string> granularities = {"instruction", "method", "class"};

  InstrumentArgs inst;
  auto* c_inst = app.add_subcommand("instrument", "Insert coverage probes into a smali tree");
  c_inst->add_option("in", inst.in, "Input smali directory")->required();
  c_inst->add_option("--out", inst.out, "Output directory")->required();
  c_inst->add_option("--granularity", inst.granularity)->check(CLI::IsMember(granularities));
  c_inst->add_flag("--batch", inst.batch, "Treat each subdirectory of <in> as a program");

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Execute a call script and record coverage");
  c_run->add_option("dir", run.dir, "Smali directory, instrumented or not")->required();
  c_run->add_option("--entry", run.entry, "Call script")->required();
  c_run->add_option("--out", run.out, "Runtime report path (.acvr)");
  c_run->add_option("--crash-log", run.crash_log, "Crash log path (JSON lines)");
  c_run->add_option("--step-limit", run.step_limit, "Step budget per call");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Merge runtime reports and emit XML/HTML");
  c_rep->add_option("probemap", rep.probe_map, "acv.probemap.json")->required();
  c_rep->add_option("acvr", rep.acvr, "Runtime reports");
  c_rep->add_option("--out", rep.out, "Output directory");
  c_rep->add_option("--format", rep.format, "Comma-separated: xml, html");
  c_rep->add_option("--source", rep.source, "Original smali tree for HTML listings");

  FuzzArgs fz;
  auto* c_fuzz = app.add_subcommand("fuzz", "Run a fuzzing campaign on a generated corpus");
  c_fuzz->add_option("--corpus-seed", fz.corpus_seed);
  c_fuzz->add_option("--programs", fz.programs);
  c_fuzz->add_option("--modes", fz.modes);
  c_fuzz->add_option("--seed", fz.seed, "First search seed");
  c_fuzz->add_option("--seeds", fz.seeds, "Number of consecutive search seeds");
  c_fuzz->add_option("--budget", fz.budget, "Suite evaluations per cell");
  c_fuzz->add_option("--out", fz.out);
  c_fuzz->add_flag("--serial", fz.serial, "Run cells on one thread");

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-corpus", "Write a generated fault corpus");
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--programs", gen.programs);
  c_gen->add_option("--out", gen.out);

  std::string verify_dir;
  auto* c_ver = app.add_subcommand("verify", "Check a smali tree against the verifier");
  c_ver->add_option("dir", verify_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  if (*c_inst) return CmdInstrument(inst);
  if (*c_run) return CmdRun(run);
  if (*c_rep) return CmdReport(rep);
  if (*c_fuzz) return CmdFuzz(fz);
  if (*c_gen) return CmdGenCorpus(gen);
  if (*c_ver) return CmdVerify(verify_dir);
  return kInputError;
}
