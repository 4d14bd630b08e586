/*
 * Copyright 2026 The Shroud Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shroud/error.hpp"

namespace shroud {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kState: return "state-error";
    case ErrorCode::kCycle: return "cycle-error";
    case ErrorCode::kArity: return "arity-error";
    case ErrorCode::kFormat: return "format-error";
    case ErrorCode::kInput: return "input-error";
    case ErrorCode::kDivision: return "division-error";
    case ErrorCode::kCorruption: return "corruption-error";
    case ErrorCode::kExhausted: return "exhausted-error";
    case ErrorCode::kSplit: return "split-error";
    case ErrorCode::kShape: return "shape-error";
    case ErrorCode::kConfig: return "config-error";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kProtocol: return "protocol-error";
  }
  return "error";
}

}  // namespace shroud
