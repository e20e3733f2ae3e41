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

#include "acv/smali_parser.h"
#include "acv/strings.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>


namespace acv {
namespace {

// Directives we consume without any effect and without a warning.
const std::set<std::string_view> kSilentDirectives = {".source"};

// Debug info inside method bodies; dropped without a warning.
const std::set<std::string_view> kDebugDirectives = {".local", ".line", ".prologue", ".epilogue",
                                                     ".restart"};

std::string_view StripComment(std::string_view line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::optional<int64_t> ParseLiteral(std::string_view s) {
  s = StripWhitespace(s);
  if (s.empty()) return std::nullopt;
  char last = s.back();
  if (last == 'L' || last == 'l' || last == 't' || last == 'T' || last == 's' ||
      last == 'S') {
    s.remove_suffix(1);
  }
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if ((s.starts_with("0x") || s.starts_with("0X"))) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  uint64_t mag = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), mag, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (neg) {
    if (mag > uint64_t{1} << 63) return std::nullopt;
    return static_cast<int64_t>(0 - mag);
  }
  // Hex literals may spell the two's complement bit pattern.
  return static_cast<int64_t>(mag);
}

std::optional<Reg> ParseReg(std::string_view s) {
  s = StripWhitespace(s);
  if (s.size() < 2 || (s[0] != 'v' && s[0] != 'p')) return std::nullopt;
  uint32_t n = 0;
  auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), n);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return s[0] == 'v' ? Reg::V(n) : Reg::P(n);
}

// Splits operand text on top-level commas, keeping {...} together.
std::vector<std::string_view> SplitOperands(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  size_t start = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}') --depth;
    if (s[i] == ',' && depth == 0) {
      out.push_back(StripWhitespace(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  std::string_view tail = StripWhitespace(s.substr(start));
  if (!tail.empty() || !out.empty()) out.push_back(tail);
  return out;
}

std::optional<MemberRef> ParseMemberRef(std::string_view s, bool method) {
  size_t arrow = s.find("->");
  if (arrow == std::string_view::npos) return std::nullopt;
  MemberRef ref;
  ref.owner = std::string(s.substr(0, arrow));
  std::string_view rest = s.substr(arrow + 2);
  if (method) {
    size_t paren = rest.find('(');
    if (paren == std::string_view::npos || paren == 0) return std::nullopt;
    ref.name = std::string(rest.substr(0, paren));
    ref.type = std::string(rest.substr(paren));
    if (!ParsePrototype(ref.type).has_value()) return std::nullopt;
  } else {
    size_t colon = rest.find(':');
    if (colon == std::string_view::npos || colon == 0) return std::nullopt;
    ref.name = std::string(rest.substr(0, colon));
    ref.type = std::string(rest.substr(colon + 1));
    if (ref.type.empty()) return std::nullopt;
  }
  if (!IsClassDescriptor(ref.owner) && !ref.owner.starts_with("[")) {
    return std::nullopt;
  }
  return ref;
}

std::string_view LabelName(std::string_view tok) {
  tok = StripWhitespace(tok);
  if (tok.size() < 2 || tok[0] != ':') return {};
  return tok.substr(1);
}

bool IsKeywordFlag(std::string_view w) {
  static const std::set<std::string_view> kFlags = {
      "public", "private", "protected", "static", "final", "synchronized",
      "volatile", "bridge", "transient", "varargs", "native", "interface",
      "abstract", "strict", "synthetic", "annotation", "enum", "constructor",
      "declared-synchronized"};
  return kFlags.contains(w);
}

class FileParser {
 public:
  FileParser(std::string_view text, std::string path, std::vector<ParseDiagnostic>& diags)
      : path_(std::move(path)), diags_(diags) {
    for (std::string_view l : Split(text, "\n")) {
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      lines_.push_back(l);
    }
  }

  std::vector<SmaliClass> Run() {
    while (line_no_ < lines_.size()) {
      std::string_view raw = lines_[line_no_];
      std::string_view line = StripWhitespace(StripComment(raw));
      ++line_no_;
      if (line.empty()) continue;
      std::string_view word = FirstWord(line);
      std::string_view rest = StripWhitespace(line.substr(word.size()));
      if (word == ".class") {
        ParseClassHeader(raw, rest);
      } else if (word == ".super") {
        if (!RequireClass(raw, word)) continue;
        if (!IsClassDescriptor(rest)) {
          Error(raw, rest, "malformed .super descriptor");
          continue;
        }
        classes_.back().super_name = std::string(rest);
      } else if (word == ".field") {
        if (!RequireClass(raw, word)) continue;
        ParseField(raw, rest);
      } else if (word == ".method") {
        if (!RequireClass(raw, word)) continue;
        ParseMethod(raw, rest);
      } else if (word == ".annotation" || word == ".subannotation") {
        Warning(raw, word, StrCat("skipping ", word, " block"));
        SkipBlock(StrCat(".end ", word.substr(1)));
      } else if (kSilentDirectives.contains(word)) {
        continue;
      } else if (!word.empty() && word[0] == '.') {
        Warning(raw, word, StrCat("skipping unknown directive ", word));
      } else {
        Error(raw, word, StrCat("unexpected '", word, "' outside a method"));
      }
    }
    for (const auto& c : classes_) {
      if (c.super_name.empty()) {
        diags_.push_back({{path_, class_lines_[&c - classes_.data()], 1},
                          ParseDiagnostic::Severity::kError,
                          StrCat(c.name, " has no .super directive")});
      }
    }
    return std::move(classes_);
  }

 private:
  static std::string_view FirstWord(std::string_view line) {
    size_t end = line.find_first_of(" \t");
    return end == std::string_view::npos ? line : line.substr(0, end);
  }

  int ColumnOf(std::string_view raw, std::string_view token) const {
    if (token.data() >= raw.data() && token.data() <= raw.data() + raw.size()) {
      return static_cast<int>(token.data() - raw.data()) + 1;
    }
    return 1;
  }

  void Diag(ParseDiagnostic::Severity sev, std::string_view raw, std::string_view token,
            std::string msg, size_t line = 0) {
    int ln = static_cast<int>(line == 0 ? line_no_ : line);
    diags_.push_back({{path_, ln, ColumnOf(raw, token)}, sev, std::move(msg)});
  }
  void Error(std::string_view raw, std::string_view token, std::string msg) {
    Diag(ParseDiagnostic::Severity::kError, raw, token, std::move(msg));
  }
  void Warning(std::string_view raw, std::string_view token, std::string msg) {
    Diag(ParseDiagnostic::Severity::kWarning, raw, token, std::move(msg));
  }

  bool RequireClass(std::string_view raw, std::string_view word) {
    if (classes_.empty()) {
      Error(raw, word, StrCat(word, " before .class"));
      return false;
    }
    return true;
  }

  // Skips lines until `end` (inclusive).
  void SkipBlock(std::string_view end) {
    size_t begin = line_no_;
    while (line_no_ < lines_.size()) {
      std::string_view l = StripWhitespace(StripComment(lines_[line_no_++]));
      if (l == end) return;
    }
    diags_.push_back({{path_, static_cast<int>(begin), 1},
                      ParseDiagnostic::Severity::kError,
                      StrCat("missing ", end)});
  }

  std::pair<std::vector<std::string>, std::string_view> SplitFlags(std::string_view rest) {
    std::vector<std::string> flags;
    std::vector<std::string_view> words =
        Split(rest, " \t", true);
    size_t i = 0;
    for (; i + 1 < words.size() && IsKeywordFlag(words[i]); ++i) {
      flags.emplace_back(words[i]);
    }
    if (i >= words.size()) return {flags, {}};
    // Everything from the first non-flag word on.
    std::string_view tail = rest.substr(words[i].data() - rest.data());
    return {flags, StripWhitespace(tail)};
  }

  void ParseClassHeader(std::string_view raw, std::string_view rest) {
    auto [flags, name] = SplitFlags(rest);
    if (!IsClassDescriptor(name)) {
      Error(raw, name.empty() ? rest : name, "malformed .class descriptor");
      return;
    }
    SmaliClass c;
    c.name = std::string(name);
    c.flags = std::move(flags);
    classes_.push_back(std::move(c));
    class_lines_.push_back(static_cast<int>(line_no_));
  }

  void ParseField(std::string_view raw, std::string_view rest) {
    size_t eq = rest.find('=');
    if (eq != std::string_view::npos) {
      Warning(raw, rest.substr(eq), "ignoring field initial value");
      rest = StripWhitespace(rest.substr(0, eq));
    }
    auto [flags, decl] = SplitFlags(rest);
    size_t colon = decl.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == decl.size()) {
      Error(raw, decl.empty() ? rest : decl, "malformed .field, expected name:Type");
      return;
    }
    FieldDecl f{std::string(decl.substr(0, colon)), std::string(decl.substr(colon + 1)),
                std::move(flags)};
    // A field declaration may carry an annotation block.
    if (line_no_ < lines_.size()) {
      std::string_view next = StripWhitespace(StripComment(lines_[line_no_]));
      if (next.starts_with(".annotation")) {
        ++line_no_;
        Warning(lines_[line_no_ - 1], next, "skipping .annotation block");
        SkipBlock(".end annotation");
        if (line_no_ < lines_.size() &&
            StripWhitespace(StripComment(lines_[line_no_])) == ".end field") {
          ++line_no_;
        }
      }
    }
    classes_.back().fields.push_back(std::move(f));
  }

  void ParseMethod(std::string_view raw, std::string_view rest) {
    auto [flags, sig] = SplitFlags(rest);
    size_t paren = sig.find('(');
    SmaliMethod m;
    m.flags = std::move(flags);
    std::optional<std::pair<std::vector<std::string>, std::string>> proto;
    if (paren != std::string_view::npos && paren > 0) proto = ParsePrototype(sig.substr(paren));
    bool header_ok = proto.has_value();
    if (!header_ok) {
      Error(raw, sig.empty() ? rest : sig, "malformed .method signature");
    } else {
      m.name = std::string(sig.substr(0, paren));
      m.param_types = std::move(proto->first);
      m.return_type = std::move(proto->second);
    }
    size_t method_line = line_no_;
    std::optional<int> registers;
    bool have_locals = false;
    bool closed = false;
    std::vector<std::pair<std::string, size_t>> label_refs;  // label, line

    while (line_no_ < lines_.size()) {
      std::string_view lraw = lines_[line_no_];
      std::string_view line = StripWhitespace(StripComment(lraw));
      ++line_no_;
      if (line.empty()) continue;
      if (line == ".end method") {
        closed = true;
        break;
      }
      if (line[0] == ':') {
        std::string_view name = LabelName(line);
        if (name.empty() || name.find_first_of(" \t") != std::string_view::npos) {
          Error(lraw, line, "malformed label");
          continue;
        }
        m.body.push_back(LabelDef{std::string(name)});
        continue;
      }
      std::string_view word = FirstWord(line);
      std::string_view args = StripWhitespace(line.substr(word.size()));
      if (word == ".locals" || word == ".registers") {
        auto v = ParseLiteral(args);
        if (!v.has_value() || *v < 0 || *v > 65535) {
          Error(lraw, args.empty() ? word : args, StrCat("malformed ", word, " count"));
          continue;
        }
        if (word == ".locals") {
          m.locals = static_cast<int>(*v);
          have_locals = true;
        } else {
          registers = static_cast<int>(*v);
        }
      } else if (word == ".catch" || word == ".catchall") {
        ParseCatch(lraw, word, args, m, label_refs);
      } else if (word == ".array-data") {
        ParseArrayData(lraw, args, m);
      } else if (word == ".packed-switch" || word == ".sparse-switch") {
        ParseSwitch(lraw, word, args, m, label_refs);
      } else if (word == ".annotation") {
        Warning(lraw, word, "skipping .annotation block");
        SkipBlock(".end annotation");
      } else if (word == ".param") {
        Warning(lraw, word, "skipping .param directive");
      } else if (kDebugDirectives.contains(word) || (word == ".end" && args.starts_with("local"))) {
        continue;
      } else if (!word.empty() && word[0] == '.') {
        Warning(lraw, word, StrCat("skipping unknown directive ", word));
      } else {
        ParseInstruction(lraw, word, args, m, label_refs);
      }
    }
    if (!closed) {
      diags_.push_back({{path_, static_cast<int>(method_line), 1},
                        ParseDiagnostic::Severity::kError, "missing .end method"});
    }
    if (registers.has_value()) {
      if (have_locals) {
        Error(raw, rest, "both .locals and .registers given");
      }
      m.locals = *registers - m.ParamWidth();
      if (m.locals < 0) {
        Error(raw, rest, ".registers is smaller than the parameter width");
        m.locals = 0;
      }
    }
    std::set<std::string> defined;
    for (const auto& item : m.body) {
      if (const auto* l = std::get_if<LabelDef>(&item)) defined.insert(l->name);
    }
    for (const auto& [label, line] : label_refs) {
      if (!defined.contains(label)) {
        std::string_view lraw = lines_[line - 1];
        size_t at = lraw.find(StrCat(":", label));
        std::string_view tok = at == std::string_view::npos ? lraw : lraw.substr(at);
        Diag(ParseDiagnostic::Severity::kError, lraw, tok,
             StrCat("unresolved label :", label), line);
      }
    }
    if (header_ok) classes_.back().methods.push_back(std::move(m));
  }

  void ParseCatch(std::string_view raw, std::string_view word, std::string_view args,
                  SmaliMethod& m, std::vector<std::pair<std::string, size_t>>& refs) {
    TryDirective t;
    std::string_view rest = args;
    if (word == ".catch") {
      std::string_view type = FirstWord(rest);
      if (!IsClassDescriptor(type)) {
        Error(raw, type.empty() ? word : type, "malformed .catch exception type");
        return;
      }
      t.exception_type = std::string(type);
      rest = StripWhitespace(rest.substr(type.size()));
    }
    size_t open = rest.find('{');
    size_t close = rest.find('}');
    size_t dots = rest.find("..");
    if (open != 0 || close == std::string_view::npos || dots == std::string_view::npos ||
        dots > close) {
      Error(raw, rest.empty() ? word : rest, "malformed try range, expected {:a .. :b}");
      return;
    }
    std::string_view a = LabelName(rest.substr(1, dots - 1));
    std::string_view b = LabelName(rest.substr(dots + 2, close - dots - 2));
    std::string_view h = LabelName(rest.substr(close + 1));
    if (a.empty() || b.empty() || h.empty()) {
      Error(raw, rest, "malformed try range labels");
      return;
    }
    t.start = std::string(a);
    t.end = std::string(b);
    t.handler = std::string(h);
    for (const auto& l : {t.start, t.end, t.handler}) refs.emplace_back(l, line_no_);
    m.body.push_back(std::move(t));
  }

  void ParseArrayData(std::string_view raw, std::string_view args, SmaliMethod& m) {
    ArrayDataBlock block;
    auto width = ParseLiteral(args);
    if (!width.has_value() || (*width != 1 && *width != 2 && *width != 4 && *width != 8)) {
      Error(raw, args.empty() ? raw : args, "malformed .array-data element width");
      SkipBlock(".end array-data");
      return;
    }
    block.element_width = static_cast<int>(*width);
    size_t begin = line_no_;
    while (line_no_ < lines_.size()) {
      std::string_view lraw = lines_[line_no_];
      std::string_view l = StripWhitespace(StripComment(lraw));
      ++line_no_;
      if (l.empty()) continue;
      if (l == ".end array-data") {
        m.body.push_back(std::move(block));
        return;
      }
      for (std::string_view tok : Split(l, " \t,", true)) {
        auto v = ParseLiteral(tok);
        if (!v.has_value()) {
          Error(lraw, tok, "malformed .array-data value");
          continue;
        }
        block.values.push_back(*v);
      }
    }
    diags_.push_back({{path_, static_cast<int>(begin), 1},
                      ParseDiagnostic::Severity::kError, "missing .end array-data"});
  }

  void ParseSwitch(std::string_view raw, std::string_view word, std::string_view args,
                   SmaliMethod& m, std::vector<std::pair<std::string, size_t>>& refs) {
    SwitchPayload s;
    s.packed = word == ".packed-switch";
    std::string end = s.packed ? ".end packed-switch" : ".end sparse-switch";
    if (s.packed) {
      auto key = ParseLiteral(args);
      if (!key.has_value()) {
        Error(raw, args.empty() ? word : args, "malformed .packed-switch first key");
        SkipBlock(end);
        return;
      }
      s.first_key = static_cast<int32_t>(*key);
    }
    size_t begin = line_no_;
    while (line_no_ < lines_.size()) {
      std::string_view lraw = lines_[line_no_];
      std::string_view l = StripWhitespace(StripComment(lraw));
      ++line_no_;
      if (l.empty()) continue;
      if (l == end) {
        m.body.push_back(std::move(s));
        return;
      }
      std::string_view target = l;
      if (!s.packed) {
        size_t arrow = l.find("->");
        auto key = arrow == std::string_view::npos ? std::nullopt
                                                   : ParseLiteral(l.substr(0, arrow));
        if (!key.has_value()) {
          Error(lraw, l, "malformed .sparse-switch entry, expected key -> :label");
          continue;
        }
        s.keys.push_back(static_cast<int32_t>(*key));
        target = l.substr(arrow + 2);
      }
      std::string_view name = LabelName(target);
      if (name.empty()) {
        Error(lraw, target, "malformed switch target label");
        if (!s.packed) s.keys.pop_back();
        continue;
      }
      s.targets.emplace_back(name);
      refs.emplace_back(std::string(name), line_no_);
    }
    diags_.push_back({{path_, static_cast<int>(begin), 1},
                      ParseDiagnostic::Severity::kError, StrCat("missing ", end)});
  }

  void ParseInstruction(std::string_view raw, std::string_view word, std::string_view args,
                        SmaliMethod& m, std::vector<std::pair<std::string, size_t>>& refs) {
    std::optional<Opcode> op = LookupOpcode(word);
    if (!op.has_value()) {
      Error(raw, word, StrCat("UnsupportedOpcode: ", word));
      return;
    }
    const OpcodeInfo& info = Info(*op);
    Instruction ins;
    ins.opcode = *op;
    std::vector<std::string_view> ops = SplitOperands(args);
    if (ops.size() != info.operands.size()) {
      Error(raw, args.empty() ? word : args,
            StrCat(word, " expects ", info.operands.size(), " operand(s), got ",
                         ops.size()));
      return;
    }
    for (size_t i = 0; i < ops.size(); ++i) {
      std::string_view tok = ops[i];
      const OperandSpec& spec = info.operands[i];
      switch (spec.kind) {
        case OperandKind::kReg:
        case OperandKind::kWideReg: {
          auto r = ParseReg(tok);
          if (!r.has_value()) {
            Error(raw, tok, StrCat("expected a register, got '", tok, "'"));
            return;
          }
          ins.regs.push_back(*r);
          break;
        }
        case OperandKind::kRegList: {
          if (tok.size() < 2 || tok.front() != '{' || tok.back() != '}') {
            Error(raw, tok, "expected a register list {...}");
            return;
          }
          std::string_view inner = StripWhitespace(tok.substr(1, tok.size() - 2));
          if (inner.find("..") != std::string_view::npos) {
            Error(raw, tok, "register ranges need an invoke-*/range opcode");
            return;
          }
          if (inner.empty()) break;
          for (std::string_view r : Split(inner, ",")) {
            auto reg = ParseReg(r);
            if (!reg.has_value()) {
              Error(raw, r, StrCat("expected a register, got '",
                                         StripWhitespace(r), "'"));
              return;
            }
            ins.regs.push_back(*reg);
          }
          break;
        }
        case OperandKind::kLiteral: {
          auto v = ParseLiteral(tok);
          if (!v.has_value()) {
            Error(raw, tok, StrCat("malformed literal '", tok, "'"));
            return;
          }
          ins.literal = *v;
          break;
        }
        case OperandKind::kLabel:
        case OperandKind::kPayload: {
          std::string_view name = LabelName(tok);
          if (name.empty()) {
            Error(raw, tok, StrCat("expected a label, got '", tok, "'"));
            return;
          }
          ins.label = std::string(name);
          refs.emplace_back(ins.label, line_no_);
          break;
        }
        case OperandKind::kField:
        case OperandKind::kMethod: {
          auto ref = ParseMemberRef(tok, spec.kind == OperandKind::kMethod);
          if (!ref.has_value()) {
            Error(raw, tok, StrCat("malformed ",
                                         spec.kind == OperandKind::kMethod ? "method" : "field",
                                         " reference '", tok, "'"));
            return;
          }
          ins.ref = std::move(*ref);
          break;
        }
        case OperandKind::kType: {
          std::string_view t = tok;
          std::string_view base = t;
          while (!base.empty() && base.front() == '[') base.remove_prefix(1);
          if (!IsClassDescriptor(base) && !IsPrimitiveType(base)) {
            Error(raw, tok, StrCat("malformed type '", tok, "'"));
            return;
          }
          ins.ref = MemberRef{std::string(t), "", ""};
          break;
        }
      }
    }
    m.body.push_back(std::move(ins));
  }

  std::string path_;
  std::vector<ParseDiagnostic>& diags_;
  std::vector<std::string_view> lines_;
  size_t line_no_ = 0;  // number of lines consumed; the current line is 1-based
  std::vector<SmaliClass> classes_;
  std::vector<int> class_lines_;
};

std::string Hex(int64_t v) {
  if (v < 0) {
    uint64_t mag = 0 - static_cast<uint64_t>(v);
    return fmt::format("-0x{:x}", mag);
  }
  return fmt::format("0x{:x}", v);
}

std::string RegName(const Reg& r) {
  return StrCat(r.is_param() ? "p" : "v", r.index);
}

}  // namespace

ParseResult Parse(std::span<const SourceFile> sources) {
  std::vector<const SourceFile*> ordered;
  for (const auto& s : sources) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SourceFile* a, const SourceFile* b) { return a->path < b->path; });
  ParseResult result;
  SmaliProgram program;
  for (const SourceFile* file : ordered) {
    std::vector<ParseDiagnostic> diags;
    std::vector<SmaliClass> classes = FileParser(file->text, file->path, diags).Run();
    for (auto& c : classes) program.classes.push_back(std::move(c));
    result.diagnostics.insert(result.diagnostics.end(), diags.begin(), diags.end());
  }
  bool has_error = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                               [](const ParseDiagnostic& d) {
                                 return d.severity == ParseDiagnostic::Severity::kError;
                               });
  if (!has_error) {
    program.entry_points = DeriveEntryPoints(program);
    result.program = std::move(program);
  }
  return result;
}

ParseResult ParseText(std::string_view text, std::string path) {
  SourceFile f{std::move(path), std::string(text)};
  return Parse(std::span<const SourceFile>(&f, 1));
}

std::string FormatDiagnostic(const ParseDiagnostic& d) {
  return StrCat(d.span.path, ":", d.span.line, ":", d.span.column, ": ",
                      d.severity == ParseDiagnostic::Severity::kError ? "error" : "warning",
                      ": ", d.message);
}

absl::StatusOr<std::vector<SourceFile>> ReadSmaliTree(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    return absl::NotFoundError(StrCat(dir.string(), " is not a directory"));
  }
  std::vector<SourceFile> out;
  for (auto it = std::filesystem::recursive_directory_iterator(dir, ec);
       !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file() || it->path().extension() != ".smali") continue;
    std::ifstream in(it->path(), std::ios::binary);
    if (!in) return absl::UnavailableError(StrCat("cannot read ", it->path().string()));
    std::stringstream ss;
    ss << in.rdbuf();
    out.push_back({std::filesystem::relative(it->path(), dir).generic_string(), ss.str()});
  }
  if (ec) return absl::UnavailableError(StrCat("cannot list ", dir.string(), ": ", ec.message()));
  std::sort(out.begin(), out.end(),
            [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  return out;
}

std::string FormatInstruction(const Instruction& ins) {
  const OpcodeInfo& info = Info(ins.opcode);
  std::vector<std::string> parts;
  size_t reg = 0;
  bool wide_literal = info.mnemonic.starts_with("const-wide");
  for (const OperandSpec& spec : info.operands) {
    switch (spec.kind) {
      case OperandKind::kReg:
      case OperandKind::kWideReg:
        parts.push_back(reg < ins.regs.size() ? RegName(ins.regs[reg++]) : "v?");
        break;
      case OperandKind::kRegList: {
        std::vector<std::string> names;
        for (; reg < ins.regs.size(); ++reg) names.push_back(RegName(ins.regs[reg]));
        parts.push_back(StrCat("{", StrJoin(names, ", "), "}"));
        break;
      }
      case OperandKind::kLiteral:
        parts.push_back(Hex(ins.literal.value_or(0)) + (wide_literal ? "L" : ""));
        break;
      case OperandKind::kLabel:
      case OperandKind::kPayload:
        parts.push_back(StrCat(":", ins.label));
        break;
      case OperandKind::kField:
        parts.push_back(ins.ref ? StrCat(ins.ref->owner, "->", ins.ref->name, ":",
                                               ins.ref->type)
                                : "?");
        break;
      case OperandKind::kMethod:
        parts.push_back(ins.ref ? StrCat(ins.ref->owner, "->", ins.ref->name,
                                               ins.ref->type)
                                : "?");
        break;
      case OperandKind::kType:
        parts.push_back(ins.ref ? ins.ref->owner : "?");
        break;
    }
  }
  if (parts.empty()) return std::string(info.mnemonic);
  return StrCat(info.mnemonic, " ", StrJoin(parts, ", "));
}

std::string FormatBodyItem(const BodyItem& item) {
  if (const auto* ins = std::get_if<Instruction>(&item)) {
    return StrCat("    ", FormatInstruction(*ins));
  }
  if (const auto* l = std::get_if<LabelDef>(&item)) return StrCat(":", l->name);
  if (const auto* t = std::get_if<TryDirective>(&item)) {
    std::string head = t->exception_type.has_value()
                           ? StrCat(".catch ", *t->exception_type)
                           : std::string(".catchall");
    return StrCat("    ", head, " {:", t->start, " .. :", t->end, "} :", t->handler);
  }
  if (const auto* a = std::get_if<ArrayDataBlock>(&item)) {
    std::string out = StrCat("    .array-data ", a->element_width, "\n");
    for (int64_t v : a->values) StrAppend(&out, "        ", Hex(v), "\n");
    StrAppend(&out, "    .end array-data");
    return out;
  }
  const auto& s = std::get<SwitchPayload>(item);
  std::string out;
  if (s.packed) {
    StrAppend(&out, "    .packed-switch ", Hex(s.first_key), "\n");
    for (const auto& t : s.targets) StrAppend(&out, "        :", t, "\n");
    StrAppend(&out, "    .end packed-switch");
  } else {
    StrAppend(&out, "    .sparse-switch\n");
    for (size_t i = 0; i < s.targets.size(); ++i) {
      StrAppend(&out, "        ", Hex(s.keys[i]), " -> :", s.targets[i], "\n");
    }
    StrAppend(&out, "    .end sparse-switch");
  }
  return out;
}

std::string PrintClass(const SmaliClass& cls) {
  std::string out;
  auto with_flags = [](const std::vector<std::string>& flags) {
    return flags.empty() ? std::string() : StrCat(StrJoin(flags, " "), " ");
  };
  StrAppend(&out, ".class ", with_flags(cls.flags), cls.name, "\n");
  StrAppend(&out, ".super ", cls.super_name, "\n");
  if (!cls.fields.empty()) StrAppend(&out, "\n");
  for (const auto& f : cls.fields) {
    StrAppend(&out, ".field ", with_flags(f.flags), f.name, ":", f.type, "\n");
  }
  for (const auto& m : cls.methods) {
    StrAppend(&out, "\n.method ", with_flags(m.flags), m.Id(), "\n");
    StrAppend(&out, "    .locals ", m.locals, "\n");
    for (const auto& item : m.body) StrAppend(&out, FormatBodyItem(item), "\n");
    StrAppend(&out, ".end method\n");
  }
  return out;
}

std::string ClassFilePath(std::string_view descriptor) {
  if (!IsClassDescriptor(descriptor)) return "_.smali";
  return StrCat(descriptor.substr(1, descriptor.size() - 2), ".smali");
}

std::vector<SourceFile> Print(const SmaliProgram& program) {
  std::vector<SourceFile> out;
  out.reserve(program.classes.size());
  for (const auto& c : program.classes) out.push_back({ClassFilePath(c.name), PrintClass(c)});
  return out;
}

absl::Status WriteSmaliTree(const SmaliProgram& program, const std::filesystem::path& dir) {
  for (const SourceFile& f : Print(program)) {
    std::filesystem::path p = dir / f.path;
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) return absl::UnavailableError(StrCat("cannot create ", p.parent_path().string()));
    std::ofstream o(p, std::ios::binary);
    o << f.text;
    if (!o) return absl::UnavailableError(StrCat("cannot write ", p.string()));
  }
  return absl::OkStatus();
}

}  // namespace acv
