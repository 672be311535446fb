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

#ifndef FEDSIM_AUDIT_H_
#define FEDSIM_AUDIT_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace fedsim::audit {

// Raw-data access auditing for distributed training runs.
//
// While at least one RunScope is alive (process-wide), every read of a
// silo's raw samples goes through RecordAccess(). The read is legitimate only
// if the calling thread is inside a SiloScope for that same silo; anything
// else (another silo's scope, or no scope at all) counts as a cross-silo
// access. Outside of runs nothing is counted, so data loading and centralized
// training, which pool data on purpose, are unaffected.

class RunScope {
 public:
  RunScope();
  ~RunScope();
  RunScope(const RunScope&) = delete;
  RunScope& operator=(const RunScope&) = delete;
};

// Marks the current thread as executing on behalf of `silo_id`. Nests.
class SiloScope {
 public:
  explicit SiloScope(std::string silo_id);
  ~SiloScope();
  SiloScope(const SiloScope&) = delete;
  SiloScope& operator=(const SiloScope&) = delete;

 private:
  std::string silo_id_;
  const std::string* previous_;
};

void RecordAccess(std::string_view silo_id);

uint64_t CrossSiloAccessCount();
void ResetCounters();

}  // namespace fedsim::audit

#endif  // FEDSIM_AUDIT_H_
