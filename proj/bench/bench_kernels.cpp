#include <benchmark/benchmark.h>

#include <random>

#include "anglekv/kernels.hpp"

using namespace anglekv;

namespace {

// Mistral-shaped cache slice: 32 layers, 8 KV heads, d = 128, K8V4-log.
struct Fixture {
  Preset p = preset(Model::Mistral7B, NormProfile::K8V4Log);
  BlobHeader header;
  KvTensorSet tensors;
  SignDiagonal diag = SignDiagonal::sample(kDefaultSeed, 128);
  std::vector<std::uint8_t> payload;

  explicit Fixture(std::uint32_t tokens) : tensors(32, 8, tokens, 128) {
    header.shape = p.shape;
    header.tokens = tokens;
    header.config = p.config;
    std::mt19937_64 rng(1);
    std::normal_distribution<float> g;
    for (auto& v : tensors.data()) v = g(rng);
    payload.assign(header.payload_bytes(), 0);
    kernels::encode_payload_serial(tensors, header, diag, payload);
  }
};

template <auto Encode>
void BM_Encode(benchmark::State& state) {
  Fixture f(static_cast<std::uint32_t>(state.range(0)));
  for (auto _ : state) {
    std::fill(f.payload.begin(), f.payload.end(), 0);
    Encode(f.tensors, f.header, f.diag, f.payload);
    benchmark::DoNotOptimize(f.payload.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.tensors.vector_count()));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(f.tensors.data().size() * 4));
}

template <auto Decode>
void BM_Decode(benchmark::State& state) {
  Fixture f(static_cast<std::uint32_t>(state.range(0)));
  KvTensorSet out(32, 8, f.header.tokens, 128);
  for (auto _ : state) {
    Decode(f.payload, f.header, f.diag, out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.tensors.vector_count()));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(f.tensors.data().size() * 4));
}

}  // namespace

BENCHMARK(BM_Encode<kernels::encode_payload_serial>)->Name("encode/serial")->Arg(16)->Arg(64)->UseRealTime();
BENCHMARK(BM_Encode<kernels::encode_payload_omp>)->Name("encode/omp")->Arg(16)->Arg(64)->UseRealTime();
BENCHMARK(BM_Decode<kernels::decode_payload_serial>)->Name("decode/serial")->Arg(16)->Arg(64)->UseRealTime();
BENCHMARK(BM_Decode<kernels::decode_payload_omp>)->Name("decode/omp")->Arg(16)->Arg(64)->UseRealTime();

BENCHMARK_MAIN();
