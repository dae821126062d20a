#pragma once

// Corpus generation: per-record substreams fanned out over worker threads,
// one ordered writer.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "forge/corpus.hpp"
#include "forge/stochastics.hpp"

namespace forge {

// Child tags under a record's substream.
inline constexpr std::uint64_t kTagParams = 100;
inline constexpr std::uint64_t kTagSimulate = 101;
inline constexpr std::uint64_t kTagObserve = 102;
inline constexpr std::uint64_t kTagObservationSpec = 103;

// Stream ids for domain-level state shared by all records.
inline constexpr std::uint64_t kSharedGraphStream = 0xFFFF'FFFF'0000'0001ULL;
inline constexpr std::uint64_t kSharedChemStream = 0xFFFF'FFFF'0000'0002ULL;

inline constexpr const char* kSharedShardFile = "shared.sgnc";
inline constexpr const char* kGraphEdgesFile = "graph.edges.txt";
inline constexpr const char* kChemModelFile = "chem_model.json";

// Builds records from their id alone; domain-wide state (fitted chemistry
// model, graph) is prepared in the constructor.
class RecordFactory {
 public:
  virtual ~RecordFactory() = default;
  virtual CorpusRecord make(std::uint64_t id) const = 0;
  // Writes side files into `dir` and describes them in the manifest.
  virtual void finish(const std::filesystem::path& dir, CorpusManifest& manifest) const {
    (void)dir;
    (void)manifest;
  }
};

// `config` is a resolved configuration (see config.hpp).
std::unique_ptr<RecordFactory> make_factory(Domain domain, const nlohmann::json& config,
                                            std::uint64_t seed, std::uint64_t count);

struct GenerateRequest {
  Domain domain = Domain::Epi;
  nlohmann::json config;  // resolved
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  unsigned threads = 1;
};

CorpusManifest generate_corpus(const GenerateRequest& request);

// --threads if given, else SGNN_FORGE_THREADS, else hardware concurrency.
unsigned resolve_threads(std::optional<unsigned> cli);

// The cascade graph record stored in kSharedShardFile.
CorpusRecord read_shared_record(const std::filesystem::path& corpus_dir);

}  // namespace forge
