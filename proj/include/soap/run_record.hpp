/*
 * Copyright 2026 The SOAP-AP Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SOAP_RUN_RECORD_HPP_
#define SOAP_RUN_RECORD_HPP_

#include <chrono>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <ostream>
#include <vector>

namespace soap {

// One logged evaluation of a training run. `objective` is the training loss
// being minimised: P(w) for SOAP, mean per-example loss for the baselines.
struct RunRecord {
  std::size_t iter = 0;
  double objective = 0.0;
  double train_ap = 0.0;
  double val_ap = 0.0;  // NaN when no validation set is attached
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

using RecordSink = std::function<void(const RunRecord&)>;

inline constexpr const char* kRunRecordHeader =
    "iter,objective,train_ap,val_ap,grad_norm,wall_ms";

inline void write_record(std::ostream& os, const RunRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.3f\n", r.iter,
                r.objective, r.train_ap, r.val_ap, r.grad_norm, r.wall_ms);
  os << buf;
}

inline void write_records(std::ostream& os,
                          const std::vector<RunRecord>& records) {
  os << kRunRecordHeader << '\n';
  for (const auto& r : records) write_record(os, r);
}

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace soap

#endif  // SOAP_RUN_RECORD_HPP_
