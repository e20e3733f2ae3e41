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

// smali text <-> SmaliProgram.

#ifndef ACV_SMALI_PARSER_H_
#define ACV_SMALI_PARSER_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "acv/smali_model.h"

namespace acv {

struct SourceSpan {
  std::string path;
  int line = 1;
  int column = 1;
};

struct ParseDiagnostic {
  enum class Severity { kError, kWarning };
  SourceSpan span;
  Severity severity = Severity::kError;
  std::string message;
};

struct SourceFile {
  std::string path;
  std::string text;
};

struct ParseResult {
  // Set iff no diagnostic is an error.
  std::optional<SmaliProgram> program;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
};

// Classes are merged in file-path order; within a file, in source order.
// Entry points are derived with DeriveEntryPoints.
ParseResult Parse(std::span<const SourceFile> sources);
ParseResult ParseText(std::string_view text, std::string path = "<input>");

// "path:line:col: error: message"
std::string FormatDiagnostic(const ParseDiagnostic& d);

// Collects every *.smali file below `dir`, sorted by relative path.
absl::StatusOr<std::vector<SourceFile>> ReadSmaliTree(const std::filesystem::path& dir);

// One file per class at the package path, e.g. com/demo/Activity.smali.
std::vector<SourceFile> Print(const SmaliProgram& program);
std::string PrintClass(const SmaliClass& cls);
std::string FormatInstruction(const Instruction& instr);
// Source lines of one body item, without trailing newline; labels start at
// column 0, everything else is indented.
std::string FormatBodyItem(const BodyItem& item);
std::string ClassFilePath(std::string_view descriptor);

absl::Status WriteSmaliTree(const SmaliProgram& program,
                            const std::filesystem::path& dir);

}  // namespace acv

#endif  // ACV_SMALI_PARSER_H_
