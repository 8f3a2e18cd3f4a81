// Copyright 2026 The pwmsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>

#include "pwmsim/errors.hpp"

namespace pwmsim::cli {

/// 0 ok, 2 configuration / validation failure, 3 numerical failure.
[[nodiscard]] int exit_code(ErrorKind kind) noexcept;

/// Full command-line entry point; all console output goes to out / err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pwmsim::cli
