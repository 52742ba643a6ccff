// Copyright 2026 The clocklat Authors
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

#ifndef CLOCKLAT_ERRORS_H
#define CLOCKLAT_ERRORS_H

#include <stdexcept>
#include <string>

namespace clocklat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the caller's input was violated.
class InvalidArgument : public Error {
   public:
    using Error::Error;
};

/// The integer matrix K does not have full row rank.
class RankDeficient : public InvalidArgument {
   public:
    using InvalidArgument::InvalidArgument;
};

/// A request would exceed a configured size limit (enumeration or dimension cap).
class ResourceCapExceeded : public Error {
   public:
    using Error::Error;
};

/// An iterative solver hit its iteration limit.
class NotConverged : public Error {
   public:
    NotConverged(const std::string &what, double residual, double best_value)
        : Error(what), residual(residual), best_value(best_value) {
    }
    double residual;
    double best_value;
};

}  // namespace clocklat

#endif
