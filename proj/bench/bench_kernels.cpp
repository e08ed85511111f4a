// Parallel kernels against their serial references.

#include "support.hpp"

#include "biman/scene.hpp"
#include "biman/skill_kb.hpp"

#include <benchmark/benchmark.h>

using namespace biman;

namespace
{

SceneDocument scene_of(int objects)
{
  std::mt19937 rng(11);
  return testing_support::random_scene(rng, objects, 20.0);
}

KnowledgeBase kb_of(int entries)
{
  std::mt19937 rng(12);
  std::vector<SkillEntry> skills;
  for (const auto& name : testing_support::random_skill_names(rng, entries))
  {
    skills.push_back(testing_support::simple_entry(name));
  }
  return KnowledgeBase(std::move(skills));
}

void BM_adjacency_parallel(benchmark::State& state)
{
  const auto scene = scene_of(static_cast<int>(state.range(0)));
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(build_adjacency(scene, 1.2));
  }
}

void BM_adjacency_serial(benchmark::State& state)
{
  const auto scene = scene_of(static_cast<int>(state.range(0)));
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(build_adjacency_serial(scene, 1.2));
  }
}

void BM_retrieval_parallel(benchmark::State& state)
{
  const auto kb = kb_of(static_cast<int>(state.range(0)));
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(retrieve_top_k("grasp the held item and open a door", 5, kb));
  }
}

void BM_retrieval_serial(benchmark::State& state)
{
  const auto kb = kb_of(static_cast<int>(state.range(0)));
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(retrieve_top_k_serial("grasp the held item and open a door", 5, kb));
  }
}

}  // namespace

BENCHMARK(BM_adjacency_parallel)->Arg(50)->Arg(400)->Arg(2000);
BENCHMARK(BM_adjacency_serial)->Arg(50)->Arg(400)->Arg(2000);
BENCHMARK(BM_retrieval_parallel)->Arg(14)->Arg(500)->Arg(5000);
BENCHMARK(BM_retrieval_serial)->Arg(14)->Arg(500)->Arg(5000);

BENCHMARK_MAIN();
