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

#include "synthaug/common/rng.hpp"
#include "synthaug/common/util.hpp"

#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>

#ifndef SYNTHAUG_VERSION_STRING
#define SYNTHAUG_VERSION_STRING "0.0.0"
#endif

namespace synthaug {

namespace {
std::atomic<bool> g_verbose{false};
std::mutex g_log_mutex;
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view tool_version() { return SYNTHAUG_VERSION_STRING; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string report_header(std::string_view config_hash, std::string_view extractor) {
  std::string s = "# tool=synthaug ";
  s += tool_version();
  s += ",config_hash=";
  s += config_hash;
  s += ",extractor=";
  s += extractor.empty() ? std::string_view("none") : extractor;
  return s;
}

void set_verbose(bool verbose) { g_verbose = verbose; }

void log_info(std::string_view msg) {
  if (!g_verbose) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[synthaug] " << msg << '\n';
}

void log_warn(std::string_view msg) {
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[synthaug] warning: " << msg << '\n';
}

}  // namespace synthaug
