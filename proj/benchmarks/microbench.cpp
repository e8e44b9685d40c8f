/*
 * Copyright 2026 The dpdice Authors
 *
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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dpdice/dpnoise.hpp"
#include "dpdice/field.hpp"
#include "dpdice/hash.hpp"
#include "dpdice/mpc.hpp"
#include "dpdice/sketch.hpp"

namespace {

using namespace dpdice;

void BM_KeyedHash(benchmark::State& state) {
  const HashKey key = HashKey::from_seed(1);
  uint8_t elem[8] = {1, 2, 3, 4, 5, 6, 7, 8};
  uint64_t e = 0;
  for (auto _ : state) {
    ++e;
    std::memcpy(elem, &e, 8);
    benchmark::DoNotOptimize(keyed_hash(key, elem, 64));
  }
}
BENCHMARK(BM_KeyedHash);

void BM_IndexedHashBatch(benchmark::State& state) {
  const HashKey key = HashKey::from_seed(1);
  const uint32_t count = uint32_t(state.range(0));
  std::vector<uint64_t> out(count);
  uint64_t e = 0;
  for (auto _ : state) {
    keyed_hash_indexed_batch(key, ++e, count, 64, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * count);
}
BENCHMARK(BM_IndexedHashBatch)->Arg(4096);

void BM_FmsInsert(benchmark::State& state) {
  const HashKey key = HashKey::from_seed(2);
  FmsSketch sk(4096, 16);
  uint8_t elem[8];
  uint64_t e = 0;
  for (auto _ : state) {
    ++e;
    std::memcpy(elem, &e, 8);
    sk.insert(key, elem);
  }
  state.SetItemsProcessed(int64_t(state.iterations()));
}
BENCHMARK(BM_FmsInsert);

void BM_FmInsert(benchmark::State& state) {
  const HashKey key = HashKey::from_seed(2);
  FmSketch sk(4096, 23);
  uint8_t elem[8];
  uint64_t e = 0;
  for (auto _ : state) {
    ++e;
    std::memcpy(elem, &e, 8);
    sk.insert(key, elem);
  }
  // Every insert hashes all m rows.
  state.SetItemsProcessed(int64_t(state.iterations()) * 4096);
}
BENCHMARK(BM_FmInsert);

void BM_DiscreteGaussian(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const double sigma = double(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_discrete_gaussian({sigma}, rng));
  }
}
BENCHMARK(BM_DiscreteGaussian)->Arg(1)->Arg(74);

void BM_FieldMul(benchmark::State& state) {
  const Field f(FieldParams::defaults());
  std::mt19937_64 rng(4);
  Fe a = f.random_element(rng);
  const Fe b = f.random_element(rng);
  for (auto _ : state) {
    a = f.mul(a, b);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_FieldMul);

void BM_ZeroTest(benchmark::State& state) {
  const Field f(FieldParams::defaults());
  mpc::TrustedDealer dealer(f, 3, 5);
  auto parties = dealer.init_parties();
  const int per_batch = 64;
  std::vector<mpc::PartyMaterial*> ps;
  for (auto& p : parties) ps.push_back(&p);
  const auto phi =
      mpc::LookupPolynomial::interpolate(f, uint32_t(f.bit_length()));
  std::mt19937_64 rng(6);
  for (auto _ : state) {
    state.PauseTiming();
    for (auto& p : parties) {
      p.rand.clear();
      p.bundles.clear();
      p.triples.clear();
      p.rand_used = p.bundles_used = p.triples_used = 0;
    }
    dealer.append_rand(parties, per_batch);
    dealer.append_zero_test(parties, per_batch, uint32_t(f.bit_length()),
                            uint32_t(f.bit_length()));
    state.ResumeTiming();
    for (int i = 0; i < per_batch; ++i) {
      auto xs = mpc::dh_input_share(f, f.from_u64(rng() & 3), ps);
      benchmark::DoNotOptimize(mpc::zero_test(f, xs, ps, phi));
    }
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * per_batch);
}
BENCHMARK(BM_ZeroTest);

}  // namespace

BENCHMARK_MAIN();
