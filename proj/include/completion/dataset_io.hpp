// dataset_io.hpp — on-disk dataset format.
//
// Manifest: one CSV with header
//   sequence_id,subject_id,action,is_complete,completion_frame,feature_file
// is_complete is "true"/"false"; completion_frame is a 0-based frame index,
// left empty for incomplete sequences; feature_file is a path relative to
// the features directory.
//
// Feature files: one CSV per sequence, one row per frame, one column per
// feature dimension, no header.
#pragma once

#include <string>

#include "completion/types.hpp"

namespace completion {

// Loads and fully validates a dataset. Throws LoadError for missing or
// malformed files and ValidationError for invariant violations; messages
// name the offending file or sequence.
Dataset load_dataset(const std::string& manifest_path,
                     const std::string& features_dir);

// Writes manifest.csv plus features/<sequence_id>.csv under `dir`.
// save_dataset(load_dataset(...)) reproduces files written by this function
// byte for byte.
void save_dataset(const Dataset& dataset, const std::string& dir);

}  // namespace completion
