/*
 Copyright 2026 The stochmin Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stochmin/core.hpp"
#include "stochmin/linalg.hpp"

namespace stochmin {

/// Seeded matrix of Brownian increments, one row per path. Path p is drawn
/// from its own substream, so any slice equals the same rows of the full
/// batch.
class BrownianBatch {
 public:
  BrownianBatch() = default;
  BrownianBatch(TimeGrid grid, std::uint64_t seed, bool antithetic,
                int first_path, int paths, std::vector<double> increments);

  const TimeGrid& grid() const { return grid_; }
  int paths() const { return paths_; }
  int steps() const { return grid_.steps(); }
  std::uint64_t seed() const { return seed_; }
  bool antithetic() const { return antithetic_; }
  /// Global index of row 0 within the batch this was sliced from.
  int first_path() const { return first_path_; }

  double increment(int path, int step) const {
    return increments_[static_cast<std::size_t>(path) * grid_.steps() + step];
  }
  std::span<const double> path(int p) const {
    return {increments_.data() + static_cast<std::size_t>(p) * grid_.steps(),
            static_cast<std::size_t>(grid_.steps())};
  }
  /// W(T) along path p.
  double terminal(int p) const;

  BrownianBatch slice(int first, int count) const;
  /// Sums adjacent increment pairs: the same paths on the grid with N/2 steps.
  BrownianBatch coarsen() const;

 private:
  TimeGrid grid_;
  std::uint64_t seed_ = 0;
  bool antithetic_ = false;
  int first_path_ = 0;
  int paths_ = 0;
  std::vector<double> increments_;
};

/// Increments ~ N(0, dt). With antithetic sampling path 2j+1 = -path 2j.
BrownianBatch generate_paths(const TimeGrid& grid, int n_paths, std::uint64_t seed,
                             bool antithetic = false);
/// Paths [first, first + count) of the batch generate_paths would produce
/// for the same seed, without materializing the others.
BrownianBatch generate_path_range(const TimeGrid& grid, int first, int count,
                                  std::uint64_t seed, bool antithetic = false);

/// Dense [path][node][component] storage for per-path trajectories.
class PathField {
 public:
  PathField() = default;
  PathField(int paths, int nodes, int dim)
      : paths_(paths), nodes_(nodes), dim_(dim),
        data_(static_cast<std::size_t>(paths) * nodes * dim, 0.0) {}

  int paths() const { return paths_; }
  int nodes() const { return nodes_; }
  int dim() const { return dim_; }

  Eigen::Map<Vector> at(int p, int k) {
    return {data_.data() + offset(p, k), dim_};
  }
  Eigen::Map<const Vector> at(int p, int k) const {
    return {data_.data() + offset(p, k), dim_};
  }

  double max_abs_difference(const PathField& other) const;

 private:
  std::size_t offset(int p, int k) const {
    return (static_cast<std::size_t>(p) * nodes_ + k) * dim_;
  }

  int paths_ = 0;
  int nodes_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

/// Worker count from STOCHMIN_THREADS, else hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, count) on thread_count() workers with static
/// contiguous chunks. Bodies must only write to per-index state.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace stochmin
