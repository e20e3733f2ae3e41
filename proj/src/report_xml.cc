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

#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "acv/coverage.h"
#include "acv/strings.h"

namespace acv {
namespace {

namespace pt = boost::property_tree;

std::string Escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Method nodes carry no CLASS counter.
bool Emitted(const CoverageReport& report, CounterType t, bool method) {
  return report.Has(t) && !(method && t == CounterType::kClass);
}

void AppendCounters(std::string& out, const CoverageReport& report, const Counters& counters,
                    int indent, bool method = false) {
  for (CounterType t : kCounterTypes) {
    if (!Emitted(report, t, method)) continue;
    const Counter& c = counters[static_cast<int>(t)];
    out += fmt::format("{:{}}<counter type=\"{}\" missed=\"{}\" covered=\"{}\"/>\n", "", indent,
                       CounterTypeName(t), c.missed, c.covered);
  }
}

std::map<std::string, Counter> CounterMap(const CoverageReport& report, const Counters& counters,
                                          bool method = false) {
  std::map<std::string, Counter> out;
  for (CounterType t : kCounterTypes) {
    if (Emitted(report, t, method)) out[std::string(CounterTypeName(t))] = counters[static_cast<int>(t)];
  }
  return out;
}

absl::StatusOr<CounterNode> ReadNode(const pt::ptree& node, std::string_view element) {
  CounterNode out;
  out.name = node.get<std::string>("<xmlattr>.name", "");
  for (const auto& [tag, child] : node) {
    if (tag == "<xmlattr>") continue;
    if (tag == "counter") {
      auto type = child.get_optional<std::string>("<xmlattr>.type");
      auto missed = child.get_optional<int>("<xmlattr>.missed");
      auto covered = child.get_optional<int>("<xmlattr>.covered");
      if (!type || !missed || !covered) {
        return absl::InvalidArgumentError(StrCat("incomplete counter under ", element, " ", out.name));
      }
      out.counters[*type] = Counter{*covered, *missed};
      continue;
    }
    std::string_view expected = element == "report" ? "class" : element == "class" ? "method" : "";
    if (tag != expected) {
      return absl::InvalidArgumentError(StrCat("unexpected <", tag, "> under <", element, ">"));
    }
    absl::StatusOr<CounterNode> c = ReadNode(child, tag);
    if (!c.ok()) return c.status();
    out.children.push_back(*std::move(c));
  }
  return out;
}

}  // namespace

std::string EmitXml(const CoverageReport& report, std::string_view report_name) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  StrAppend(&out, "<report name=\"", Escape(report_name), "\" granularity=\"",
            GranularityName(report.granularity), "\">\n");
  for (const ClassCoverage& c : report.classes) {
    StrAppend(&out, "  <class name=\"", Escape(c.name), "\">\n");
    for (const MethodCoverage& m : c.methods) {
      StrAppend(&out, "    <method name=\"", Escape(m.id), "\">\n");
      AppendCounters(out, report, m.counters, 6, true);
      out += "    </method>\n";
    }
    AppendCounters(out, report, c.counters, 4);
    out += "  </class>\n";
  }
  AppendCounters(out, report, report.counters, 2);
  out += "</report>\n";
  return out;
}

absl::StatusOr<CounterNode> ReadXmlCounters(std::string_view xml) {
  pt::ptree tree;
  std::istringstream in{std::string(xml)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    return absl::InvalidArgumentError(StrCat("malformed XML: ", e.what()));
  }
  auto root = tree.get_child_optional("report");
  if (!root) return absl::InvalidArgumentError("missing <report> element");
  return ReadNode(*root, "report");
}

CounterNode CounterTree(const CoverageReport& report, std::string_view report_name) {
  CounterNode root{std::string(report_name), CounterMap(report, report.counters), {}};
  for (const ClassCoverage& c : report.classes) {
    CounterNode cn{c.name, CounterMap(report, c.counters), {}};
    for (const MethodCoverage& m : c.methods) {
      cn.children.push_back({m.id, CounterMap(report, m.counters, true), {}});
    }
    root.children.push_back(std::move(cn));
  }
  return root;
}

}  // namespace acv
