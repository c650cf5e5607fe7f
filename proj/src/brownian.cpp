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

#include "stochmin/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <random>
#include <thread>

#include "stochmin/errors.hpp"

namespace stochmin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

BrownianBatch::BrownianBatch(TimeGrid grid, std::uint64_t seed, bool antithetic,
                             int first_path, int paths, std::vector<double> increments)
    : grid_(grid), seed_(seed), antithetic_(antithetic), first_path_(first_path),
      paths_(paths), increments_(std::move(increments)) {
  if (increments_.size() != static_cast<std::size_t>(paths) * grid_.steps()) {
    throw Error(ErrorCode::kShapeMismatch, "increments must be paths x steps");
  }
}

double BrownianBatch::terminal(int p) const {
  double w = 0.0;
  for (double dw : path(p)) w += dw;
  return w;
}

BrownianBatch BrownianBatch::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > paths_) {
    throw Error(ErrorCode::kInvalidArgument, "path slice out of range");
  }
  const auto begin = increments_.begin() + static_cast<std::ptrdiff_t>(first) * steps();
  std::vector<double> inc(begin, begin + static_cast<std::ptrdiff_t>(count) * steps());
  return BrownianBatch(grid_, seed_, antithetic_, first_path_ + first, count, std::move(inc));
}

BrownianBatch BrownianBatch::coarsen() const {
  if (steps() % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "coarsening needs an even step count");
  }
  const int half = steps() / 2;
  std::vector<double> inc(static_cast<std::size_t>(paths_) * half);
  for (int p = 0; p < paths_; ++p) {
    for (int k = 0; k < half; ++k) {
      inc[static_cast<std::size_t>(p) * half + k] =
          increment(p, 2 * k) + increment(p, 2 * k + 1);
    }
  }
  return BrownianBatch(TimeGrid(grid_.horizon(), half), seed_, antithetic_, first_path_,
                       paths_, std::move(inc));
}

BrownianBatch generate_path_range(const TimeGrid& grid, int first, int count,
                                  std::uint64_t seed, bool antithetic) {
  if (first < 0 || count < 0) {
    throw Error(ErrorCode::kInvalidArgument, "path range must be non-negative");
  }
  if (antithetic && (first % 2 != 0 || count % 2 != 0)) {
    throw Error(ErrorCode::kInvalidArgument, "antithetic batches need whole pairs of paths");
  }
  const int N = grid.steps();
  const double scale = std::sqrt(grid.dt());
  std::vector<double> inc(static_cast<std::size_t>(count) * N);
  parallel_for(count, [&](int i) {
    const int p = first + i;
    const int stream = antithetic ? p / 2 : p;
    const double sign = antithetic && (p % 2 == 1) ? -1.0 : 1.0;
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))));
    std::normal_distribution<double> normal(0.0, 1.0);
    double* row = inc.data() + static_cast<std::size_t>(i) * N;
    for (int k = 0; k < N; ++k) row[k] = sign * scale * normal(rng);
  });
  return BrownianBatch(grid, seed, antithetic, first, count, std::move(inc));
}

BrownianBatch generate_paths(const TimeGrid& grid, int n_paths, std::uint64_t seed,
                             bool antithetic) {
  return generate_path_range(grid, 0, n_paths, seed, antithetic);
}

double PathField::max_abs_difference(const PathField& other) const {
  if (other.paths_ != paths_ || other.nodes_ != nodes_ || other.dim_ != dim_) {
    throw Error(ErrorCode::kShapeMismatch, "path fields differ in shape");
  }
  double out = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    out = std::max(out, std::abs(data_[i] - other.data_[i]));
  }
  return out;
}

int thread_count() {
  if (const char* env = std::getenv("STOCHMIN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, const std::function<void(int)>& body) {
  const int workers = std::min(thread_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failure(static_cast<std::size_t>(workers));
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(count) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
    pool.emplace_back([&body, &failure, w, begin, end] {
      try {
        for (int i = begin; i < end; ++i) body(i);
      } catch (...) {
        failure[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : failure) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace stochmin
