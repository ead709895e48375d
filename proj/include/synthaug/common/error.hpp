// Copyright 2026 The synthaug Authors. All Rights Reserved.
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

namespace synthaug {

// Root of every error the library raises. Each subclass maps to one failure
// category so callers (and the CLI) can react per category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class ManifestError : public Error { using Error::Error; };
class PipelineError : public Error { using Error::Error; };
class CheckpointError : public Error { using Error::Error; };

// Carries the parameter name or step index that went non-finite.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::string where)
      : Error(what + " [" + where + "]"), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace synthaug
