// Copyright 2026 The fedsim Authors. All Rights Reserved.
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

#include "fedsim/audit.h"

#include <atomic>
#include <utility>

namespace fedsim::audit {
namespace {

std::atomic<int> g_active_runs{0};
std::atomic<uint64_t> g_cross_silo{0};
thread_local const std::string* t_current_silo = nullptr;

}  // namespace

RunScope::RunScope() { g_active_runs.fetch_add(1); }
RunScope::~RunScope() { g_active_runs.fetch_sub(1); }

SiloScope::SiloScope(std::string silo_id)
    : silo_id_(std::move(silo_id)), previous_(t_current_silo) {
  t_current_silo = &silo_id_;
}

SiloScope::~SiloScope() { t_current_silo = previous_; }

void RecordAccess(std::string_view silo_id) {
  if (g_active_runs.load(std::memory_order_relaxed) == 0) return;
  if (t_current_silo == nullptr || *t_current_silo != silo_id) {
    g_cross_silo.fetch_add(1, std::memory_order_relaxed);
  }
}

uint64_t CrossSiloAccessCount() { return g_cross_silo.load(); }

void ResetCounters() { g_cross_silo.store(0); }

}  // namespace fedsim::audit
