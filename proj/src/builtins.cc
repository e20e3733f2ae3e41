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

#include "acv/builtins.h"

namespace acv {
namespace {

constexpr BuiltinClass kClasses[] = {
    {kObjectClass, ""},
    {kThrowableClass, kObjectClass},
    {"Ljava/lang/Exception;", kThrowableClass},
    {"Ljava/lang/RuntimeException;", "Ljava/lang/Exception;"},
    {kArithmeticException, "Ljava/lang/RuntimeException;"},
    {kNullPointerException, "Ljava/lang/RuntimeException;"},
    {kArrayIndexOutOfBoundsException, "Ljava/lang/RuntimeException;"},
    {kIllegalMonitorStateException, "Ljava/lang/RuntimeException;"},
    {kClassCastException, "Ljava/lang/RuntimeException;"},
    {kNegativeArraySizeException, "Ljava/lang/RuntimeException;"},
    {kRuntimeClass, kObjectClass},
};

}  // namespace

std::span<const BuiltinClass> BuiltinClasses() { return kClasses; }

const BuiltinClass* FindBuiltinClass(std::string_view name) {
  for (const auto& c : kClasses) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool IsBuiltinStatic(std::string_view owner, std::string_view id) {
  return owner == kRuntimeClass &&
         (id == "emit(I)V" || id == "emit(J)V" || id == "emit(Z)V" ||
          id == "emit(Ljava/lang/Object;)V");
}

bool IsBuiltinMethod(std::string_view owner, std::string_view id) {
  if (IsBuiltinStatic(owner, id)) return true;
  return owner != kRuntimeClass && FindBuiltinClass(owner) != nullptr &&
         id == "<init>()V";
}

}  // namespace acv
