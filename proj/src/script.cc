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

#include <charconv>

#include "absl/status/status.h"
#include "acv/interpreter.h"
#include "acv/strings.h"

namespace acv {
namespace {

std::optional<int64_t> ParseInt(std::string_view s) {
  bool neg = !s.empty() && s[0] == '-';
  if (neg) s.remove_prefix(1);
  int base = 10;
  if (s.starts_with("0x") || s.starts_with("0X")) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return neg ? -v : v;
}

}  // namespace

absl::StatusOr<Script> ParseScript(std::string_view text) {
  Script out;
  int line_no = 0;
  for (std::string_view line : Split(text, "\n")) {
    ++line_no;
    if (size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<std::string_view> tok = Split(StripWhitespace(line), " \t", true);
    if (tok.empty()) continue;
    ScriptEvent e;
    e.line = line_no;
    if (tok[0] == "stop" && tok.size() == 1) {
      e.kind = ScriptEvent::Kind::kStop;
    } else if (tok[0] == "call" && tok.size() >= 3 && IsClassDescriptor(tok[1]) &&
               tok[2].find('(') != std::string_view::npos) {
      e.class_name = std::string(tok[1]);
      e.method = std::string(tok[2]);
      for (size_t i = 3; i < tok.size(); ++i) e.args.emplace_back(tok[i]);
    } else {
      return absl::InvalidArgumentError(
          StrCat("script line ", line_no, ": expected 'call <class> <method> <args...>' or 'stop'"));
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string FormatScript(const Script& script) {
  std::string out;
  for (const ScriptEvent& e : script) {
    if (e.kind == ScriptEvent::Kind::kStop) {
      out += "stop\n";
      continue;
    }
    StrAppend(&out, "call ", e.class_name, " ", e.method);
    for (const auto& a : e.args) StrAppend(&out, " ", a);
    out += "\n";
  }
  return out;
}

absl::StatusOr<std::vector<Value>> TypedArgs(const SmaliProgram& program, const ScriptEvent& e) {
  const SmaliMethod* m = program.FindMethod(e.class_name, e.method);
  if (m == nullptr) {
    return absl::NotFoundError(StrCat("EntryNotFound: ", e.class_name, "->", e.method));
  }
  if (m->param_types.size() != e.args.size()) {
    return absl::InvalidArgumentError(StrCat("script line ", e.line, ": ", e.method, " takes ",
                                             m->param_types.size(), " argument(s), got ",
                                             e.args.size()));
  }
  std::vector<Value> out;
  for (size_t i = 0; i < e.args.size(); ++i) {
    const std::string& t = m->param_types[i];
    const std::string& a = e.args[i];
    auto bad = [&] {
      return absl::InvalidArgumentError(
          StrCat("script line ", e.line, ": '", a, "' is not a valid ", t, " argument"));
    };
    if (IsReferenceType(t)) {
      if (a != "null") return bad();
      out.push_back(Value::Null());
    } else if (t == "Z") {
      if (a == "true" || a == "1") {
        out.push_back(Value::Bool(true));
      } else if (a == "false" || a == "0") {
        out.push_back(Value::Bool(false));
      } else {
        return bad();
      }
    } else {
      auto v = ParseInt(a);
      if (!v.has_value()) return bad();
      if (TypeWidth(t) == 2) {
        out.push_back(Value::Wide(*v));
      } else {
        if (*v < INT32_MIN || *v > UINT32_MAX) return bad();
        out.push_back(Value::Int(static_cast<int32_t>(*v)));
      }
    }
  }
  return out;
}

ScriptOutcome RunScript(Vm& vm, const Script& script, const std::function<void()>& on_stop) {
  ScriptOutcome out;
  for (const ScriptEvent& e : script) {
    if (e.kind == ScriptEvent::Kind::kStop) {
      if (on_stop) on_stop();
      continue;
    }
    absl::StatusOr<std::vector<Value>> args = TypedArgs(vm.program(), e);
    if (!args.ok()) {
      out.status = args.status();
      return out;
    }
    absl::StatusOr<CallOutcome> r = vm.Call(e.class_name, e.method, *args);
    if (!r.ok()) {
      out.status = r.status();
      return out;
    }
    if (r->crash.has_value()) out.crashes.push_back(*r->crash);
    out.calls.push_back(*std::move(r));
  }
  return out;
}

}  // namespace acv
