#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "instseg/evaluation.hpp"
#include "instseg/refinement.hpp"
#include "instseg/scene.hpp"
#include "instseg/synthesis.hpp"

namespace instseg {

// Binary scene container, magic "SGSC". Little-endian header
// (version, flags, N, C, K) followed by fixed-order float32/int32 payload
// sections: coords, optional colors, semantic scores, offsets, semantic
// labels, instance ids, instance classes. Instance centers are derived on
// read. Writes are atomic (temp file + rename); reads validate magic,
// version, and counts and name the section on truncation.
void write_scene(const Scene& scene, const std::filesystem::path& path);
Scene read_scene(const std::filesystem::path& path);

// Proposal lists, magic "SGPR".
void write_proposals(std::span<const Proposal> proposals,
                     const std::filesystem::path& path);
std::vector<Proposal> read_proposals(const std::filesystem::path& path);

// Refined instances, magic "SGIN". Scores and boxes are stored as float64
// so confidence = class_score * mask_score survives a round trip exactly.
void write_instances(std::span<const RefinedInstance> instances,
                     const std::filesystem::path& path);
std::vector<RefinedInstance> read_instances(const std::filesystem::path& path);

// Externally produced refinement outputs, magic "SGRF": one record per
// proposal with category, class score, mask score, and per-member mask
// flags. Confidence and boxes are recomputed on load.
struct ExternalRefinementRecord {
  std::int32_t category = 0;
  double class_score = 0.0;
  double mask_score = 0.0;
  std::vector<std::uint8_t> mask_flags;  // one per proposal member
};

void write_refinement(std::span<const ExternalRefinementRecord> records,
                      const std::filesystem::path& path);

// Validates record count against proposals, score ranges, mask flag
// lengths, and category range against the scene before building instances.
std::vector<RefinedInstance> load_external_refinement(
    const Scene& scene, std::span<const Proposal> proposals,
    const std::filesystem::path& path);

// JSON synthesis config; missing keys keep their defaults.
SynthConfig read_synth_config(const std::filesystem::path& path);

// Flat key-value form of the report (deterministic byte-for-byte given the
// same report) and a human-readable rendering.
std::string format_report_machine(const EvalReport& report);
std::string format_report_human(const EvalReport& report);
void write_text_atomic(const std::string& text,
                       const std::filesystem::path& path);

}  // namespace instseg
