#pragma once

#include <cstdint>
#include <filesystem>

#include "demo/dataset.hpp"

namespace demo {

// Desk-scale synthetic data generator. Emits images.csv, labels.csv and
// norms.csv into `dir`, internally consistent and parseable by the
// ingestion routines. Deterministic for a fixed (n, seed).
//
// Usage pattern is fixed: row i is PublicTest when i%10==8, PrivateTest when
// i%10==9, Training otherwise, so n=40 yields a 32/4/4 split. Votes always
// sum to 10 and every row keeps at least one emotion vote (no unratable
// rows; tests construct those by hand).
struct SynthPaths {
    std::filesystem::path images;
    std::filesystem::path labels;
    std::filesystem::path norms;
};

SynthPaths write_synth_dataset(const std::filesystem::path& dir, int n, std::uint64_t seed);

// The fixed norm table the generator ships: the happiness row carries the
// (8.21, 6.49, 6.63) anchor values.
NormTable synth_norms();

}  // namespace demo
