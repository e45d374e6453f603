#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "embedalign/data.hpp"

namespace embedalign {

// The bilingual-embedding oracle: paired "languages" related by a known
// orthogonal transform (optionally pushed through tanh), with class
// structure on a sphere of cluster centers. Stands in for a real frozen
// encoder so alignment and transfer quality are checkable.

enum class TransformKind { Linear, Tanh };

TransformKind transform_kind_from_string(const std::string& s);
const char* transform_kind_to_string(TransformKind k);

struct OracleSpec {
    std::size_t dim = 64;
    std::size_t pairs = 4000;
    std::size_t classes = 3;
    TransformKind kind = TransformKind::Tanh;
    double sigma = 0.05;      // target-side noise
    double separation = 4.0;  // cluster-center sphere radius
    std::uint64_t seed = 7;

    void validate() const;
};

struct GroundTruth {
    Matrix transform;  // the orthogonal Q
    TransformKind kind;
    Matrix centers;  // classes x dim, source space
    double sigma;
    double separation;

    nlohmann::json to_json() const;
};

struct World {
    ParallelEmbeddingSet parallel;
    std::vector<std::uint32_t> labels;
    GroundTruth truth;
};

// Source-space task data plus its target-space twin, all disjoint from the
// aligner pairs and drawn from the same generative process.
struct SplitWorld {
    ParallelEmbeddingSet parallel;
    std::vector<std::uint32_t> parallel_labels;
    LabeledEmbeddingSet task_train;   // source space
    Matrix task_train_native;         // target space, same rows/labels
    LabeledEmbeddingSet task_test;    // target space
    GroundTruth truth;
};

// Q from Householder QR of a standard-Gaussian d x d draw, sign-corrected
// so diag(R) > 0.
Matrix gen_orthogonal(std::size_t d, RngStream& rng);

World generate_world(const OracleSpec& spec);
SplitWorld generate_split_world(const OracleSpec& spec, std::size_t n_task_train,
                                std::size_t n_task_test);

// Writes embedding files, label files, manifest.json and the ground-truth
// sidecar into out_dir; returns the manifest path.
std::string write_world_files(const SplitWorld& world, const std::string& out_dir,
                              bool share_allowed);

}  // namespace embedalign
