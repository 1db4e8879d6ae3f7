#pragma once

namespace condchain {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Schema version tags embedded in serialized artifacts.
inline constexpr const char* kChainSchemaVersion = "mmcc-chain/1";
inline constexpr const char* kInstanceSchemaVersion = "mmcc-inst/1";
inline constexpr const char* kInstructionTemplateVersion = "nested-if/1";

}  // namespace condchain
