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

#include <fstream>
#include <unordered_map>

#include "acv/coverage.h"
#include "acv/smali_parser.h"
#include "acv/strings.h"

namespace acv {
namespace {

constexpr std::string_view kStyle = R"(<style>
body { font-family: sans-serif; margin: 1.5em; }
table { border-collapse: collapse; }
th, td { padding: 2px 10px; border-bottom: 1px solid #ddd; text-align: left; }
.bar { display: inline-block; width: 120px; height: 10px; background: #d33; }
.bar span { display: block; height: 10px; background: #3a3; }
pre { font-family: monospace; margin: 0; }
.covered { background: #cfc; }
.missed { background: #fcc; }
.untraceable { color: #888; }
h2 { font-size: 1.05em; margin-top: 1.5em; }
</style>
)";

std::string Html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string Page(std::string_view title, std::string_view body) {
  return StrCat("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>", Html(title),
                "</title>\n", kStyle, "</head>\n<body>\n", body, "</body>\n</html>\n");
}

std::string CounterCells(const CoverageReport& report, const Counters& counters,
                         bool method = false) {
  std::string out;
  for (CounterType t : kCounterTypes) {
    if (!report.Has(t)) continue;
    if (method && t == CounterType::kClass) {
      out += "<td></td>";
      continue;
    }
    const Counter& c = counters[static_cast<int>(t)];
    out += fmt::format(
        "<td><span class=\"bar\"><span style=\"width:{:.0f}px\"></span></span> {:.2f}% ({}/{})</td>",
        120.0 * c.ratio(), 100.0 * c.ratio(), c.covered, c.total());
  }
  return out;
}

std::string HeaderCells(const CoverageReport& report) {
  std::string out;
  for (CounterType t : kCounterTypes) {
    if (report.Has(t)) StrAppend(&out, "<th>", CounterTypeName(t), "</th>");
  }
  return out;
}

std::string MethodBlock(const CoverageReport& report, const MethodCoverage* mc,
                        const SmaliMethod* m, std::string_view id) {
  std::string out = StrCat("<h2>", Html(id));
  if (mc != nullptr && report.Has(CounterType::kMethod)) {
    StrAppend(&out, mc->covered ? " <span class=\"covered\">entered</span>"
                                : " <span class=\"missed\">not entered</span>");
  }
  out += "</h2>\n";
  if (m == nullptr) {
    if (mc == nullptr) return out;
    for (const InstructionCoverage& i : mc->instructions) {
      out += fmt::format("<pre class=\"{}\">#{}</pre>\n", i.covered ? "covered" : "missed",
                         i.body_index);
    }
    return out;
  }
  std::unordered_map<int, bool> covered;
  if (mc != nullptr) {
    for (const InstructionCoverage& i : mc->instructions) covered[i.body_index] = i.covered;
  }
  const bool per_instruction = report.Has(CounterType::kInstruction) && mc != nullptr;
  for (size_t k = 0; k < m->body.size(); ++k) {
    std::string text = Html(FormatBodyItem(m->body[k]));
    std::string_view css;
    if (per_instruction && AsInstruction(m->body[k]) != nullptr) {
      auto it = covered.find(static_cast<int>(k));
      css = it == covered.end() ? "untraceable" : it->second ? "covered" : "missed";
    }
    if (css.empty()) {
      StrAppend(&out, "<pre>", text, "</pre>\n");
    } else {
      StrAppend(&out, "<pre class=\"", css, "\">", text, "</pre>\n");
    }
  }
  return out;
}

}  // namespace

std::string HtmlPageName(std::string_view class_name) {
  return StrCat(FlatClassName(class_name), ".html");
}

absl::Status EmitHtml(const CoverageReport& report, const SmaliProgram* program,
                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return absl::UnavailableError(StrCat("cannot create ", dir.string(), ": ", ec.message()));
  auto write = [&](const std::string& name, const std::string& text) -> absl::Status {
    std::ofstream out(dir / name, std::ios::trunc);
    out << text;
    if (!out) return absl::UnavailableError(StrCat("cannot write ", (dir / name).string()));
    return absl::OkStatus();
  };

  std::string index = StrCat("<h1>Coverage (", GranularityName(report.granularity),
                             " granularity)</h1>\n<table>\n<tr><th>Class</th>",
                             HeaderCells(report), "</tr>\n");
  for (const ClassCoverage& c : report.classes) {
    StrAppend(&index, "<tr><td><a href=\"", HtmlPageName(c.name), "\">", Html(c.name), "</a></td>",
              CounterCells(report, c.counters), "</tr>\n");
  }
  StrAppend(&index, "<tr><th>Total</th>", CounterCells(report, report.counters), "</tr>\n</table>\n");
  if (absl::Status s = write("index.html", Page("Coverage", index)); !s.ok()) return s;

  for (const ClassCoverage& c : report.classes) {
    std::string body = StrCat("<p><a href=\"index.html\">index</a></p>\n<h1>", Html(c.name),
                              "</h1>\n<table>\n<tr><th></th>", HeaderCells(report), "</tr>\n",
                              "<tr><td>class</td>", CounterCells(report, c.counters), "</tr>\n");
    for (const MethodCoverage& m : c.methods) {
      StrAppend(&body, "<tr><td>", Html(m.id), "</td>", CounterCells(report, m.counters, true), "</tr>\n");
    }
    body += "</table>\n";
    const SmaliClass* cls = program != nullptr ? program->FindClass(c.name) : nullptr;
    if (cls != nullptr) {
      for (const SmaliMethod& m : cls->methods) {
        const MethodCoverage* mc = nullptr;
        std::string id = m.Id();
        for (const MethodCoverage& x : c.methods) {
          if (x.id == id) mc = &x;
        }
        body += MethodBlock(report, mc, &m, id);
      }
    } else {
      for (const MethodCoverage& m : c.methods) body += MethodBlock(report, &m, nullptr, m.id);
    }
    if (absl::Status s = write(HtmlPageName(c.name), Page(c.name, body)); !s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace acv
