#pragma once

#include <string_view>

namespace lineage {

/// True when `code` (already lowercase) is on the shipped ISO-639 allowlist.
/// Bare two- or three-letter tags are only treated as language declarations
/// when they pass this check; everything else stays a plain tag.
bool is_iso639_code(std::string_view code);

} // namespace lineage
