// Copyright 2026 The diqkd-ps Authors
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

#include <stdexcept>
#include <string>

namespace diqkd {

/// A parameter or configuration value outside its documented domain. The
/// message always names the offending field.
class ParameterError : public std::invalid_argument {
   public:
    ParameterError(const std::string &field, const std::string &what)
        : std::invalid_argument(field + ": " + what), field_(field) {}

    const std::string &field() const noexcept { return field_; }

   private:
    std::string field_;
};

/// Inputs that cannot be realized by the requested computation, e.g. a
/// signaling behavior handed to the guessing program.
class InconsistentInput : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Post-selection kept no key rounds (p_V == 0).
class EmptyKeySet : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// The semidefinite solver did not return a usable optimum.
class SolverFailure : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace diqkd
