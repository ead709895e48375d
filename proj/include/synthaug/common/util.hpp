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

#include <cstdint>
#include <string>
#include <string_view>

namespace synthaug {

std::string_view tool_version();

// 64-bit FNV-1a, printed as 16 hex digits. Used for config hashes in report
// headers.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// One-line provenance header written as the first line of every CSV report:
// "# tool=synthaug <ver>,config_hash=<hex>,extractor=<id>".
std::string report_header(std::string_view config_hash, std::string_view extractor);

void log_info(std::string_view msg);
void log_warn(std::string_view msg);
// When false (the default in tests), log_info is silent.
void set_verbose(bool verbose);

}  // namespace synthaug
