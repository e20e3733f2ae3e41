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

// Classes the interpreter provides without smali sources: java.lang.Object,
// a fixed exception tree and the acv runtime with its emit() natives.

#ifndef ACV_BUILTINS_H_
#define ACV_BUILTINS_H_

#include <span>
#include <string_view>

namespace acv {

inline constexpr std::string_view kObjectClass = "Ljava/lang/Object;";
inline constexpr std::string_view kThrowableClass = "Ljava/lang/Throwable;";
inline constexpr std::string_view kArithmeticException =
    "Ljava/lang/ArithmeticException;";
inline constexpr std::string_view kNullPointerException =
    "Ljava/lang/NullPointerException;";
inline constexpr std::string_view kArrayIndexOutOfBoundsException =
    "Ljava/lang/ArrayIndexOutOfBoundsException;";
inline constexpr std::string_view kIllegalMonitorStateException =
    "Ljava/lang/IllegalMonitorStateException;";
inline constexpr std::string_view kClassCastException =
    "Ljava/lang/ClassCastException;";
inline constexpr std::string_view kNegativeArraySizeException =
    "Ljava/lang/NegativeArraySizeException;";
inline constexpr std::string_view kRuntimeClass = "Lacv/Runtime;";

struct BuiltinClass {
  std::string_view name;
  std::string_view super_name;  // empty for Object
};

// Declaration order puts supertypes first.
std::span<const BuiltinClass> BuiltinClasses();
const BuiltinClass* FindBuiltinClass(std::string_view name);

// Builtin methods: <init>()V on every class except the runtime, and
// static emit(I|J|Z|Ljava/lang/Object;)V on the runtime.
bool IsBuiltinMethod(std::string_view owner, std::string_view id);
bool IsBuiltinStatic(std::string_view owner, std::string_view id);

}  // namespace acv

#endif  // ACV_BUILTINS_H_
