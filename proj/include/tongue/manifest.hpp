#pragma once

#include <filesystem>
#include <ostream>

#include "tongue/core.hpp"

namespace tongue {

/// Parses a JSON-lines manifest. Each non-blank line is an object with
/// `path`, `label` ("healthy"|"patient"), `split` ("train"|"test") and an
/// optional `quad` of four [x,y] pairs (TL,TR,BR,BL). An optional `id` key
/// overrides the default image id (the file stem of `path`). Relative paths
/// are resolved against the manifest's directory. Sample order follows line
/// order.
Dataset load_manifest(const std::filesystem::path& path, const ReferenceModel& reference = {});

/// Same parser over in-memory text; `base_dir` resolves relative paths.
Dataset parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                       const ReferenceModel& reference = {});

/// One manifest line per sample; `path` is written relative to `base_dir`
/// when the sample lives under it.
void write_manifest(const Dataset& dataset, std::ostream& out,
                    const std::filesystem::path& base_dir);

}  // namespace tongue
