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

// Umbrella header.

#ifndef SOAP_SOAP_HPP_
#define SOAP_SOAP_HPP_

#include "soap/baselines.hpp"
#include "soap/data.hpp"
#include "soap/error.hpp"
#include "soap/harness.hpp"
#include "soap/matrix.hpp"
#include "soap/metrics.hpp"
#include "soap/model.hpp"
#include "soap/objective.hpp"
#include "soap/optimizer.hpp"
#include "soap/run_record.hpp"
#include "soap/stats.hpp"
#include "soap/surrogate.hpp"

#endif  // SOAP_SOAP_HPP_
