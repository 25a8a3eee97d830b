// Copyright 2026 The snailkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace snailkit {

/// Base of every error raised by the toolkit. `is_validation()` separates
/// bad-input failures (CLI exit 2) from numerical non-convergence (exit 3).
class Error : public std::runtime_error {
   public:
    explicit Error(const std::string &what, bool validation = true)
        : std::runtime_error(what), validation_(validation) {}
    bool is_validation() const noexcept { return validation_; }

   private:
    bool validation_;
};

#define SNAILKIT_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                      \
       public:                                                       \
        explicit Name(const std::string &what) : Error(#Name ": " + what) {} \
    }

SNAILKIT_DEFINE_ERROR(InvalidConfig);
SNAILKIT_DEFINE_ERROR(DegeneratePotential);
SNAILKIT_DEFINE_ERROR(InvalidBracket);
SNAILKIT_DEFINE_ERROR(NoSignChange);
SNAILKIT_DEFINE_ERROR(StraddlePole);
SNAILKIT_DEFINE_ERROR(Unsolvable);
SNAILKIT_DEFINE_ERROR(TruncationTooSmall);
SNAILKIT_DEFINE_ERROR(NonPositiveOccupation);
SNAILKIT_DEFINE_ERROR(Unphysical);
SNAILKIT_DEFINE_ERROR(BadInput);
SNAILKIT_DEFINE_ERROR(NoPeaksFound);
SNAILKIT_DEFINE_ERROR(InsufficientPeaks);
SNAILKIT_DEFINE_ERROR(Unidentifiable);
SNAILKIT_DEFINE_ERROR(SchemaError);
SNAILKIT_DEFINE_ERROR(IoError);

#undef SNAILKIT_DEFINE_ERROR

class NoConvergence : public Error {
   public:
    explicit NoConvergence(const std::string &what)
        : Error("NoConvergence: " + what, /*validation=*/false) {}
};

/// Malformed input text; carries the 1-based file line, data row and column.
class ParseError : public Error {
   public:
    ParseError(const std::string &what, int line, int row, int column)
        : Error("ParseError: " + what + " (line " + std::to_string(line) + ", row " +
                std::to_string(row) + ", column " + std::to_string(column) + ")"),
          line_(line),
          row_(row),
          column_(column) {}
    int line() const noexcept { return line_; }
    int row() const noexcept { return row_; }
    int column() const noexcept { return column_; }

   private:
    int line_;
    int row_;
    int column_;
};

}  // namespace snailkit
