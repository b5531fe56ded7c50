//
// Copyright 2026 The NISS Simulator Authors
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
//

#ifndef NISS_NISS_HPP_
#define NISS_NISS_HPP_

#include "niss/analysis.hpp"
#include "niss/config.hpp"
#include "niss/csv.hpp"
#include "niss/dataset.hpp"
#include "niss/dp_mechanism.hpp"
#include "niss/errors.hpp"
#include "niss/experiment.hpp"
#include "niss/federation.hpp"
#include "niss/models.hpp"
#include "niss/niss_protocol.hpp"
#include "niss/numerics.hpp"
#include "niss/parallel.hpp"

#endif  // NISS_NISS_HPP_
