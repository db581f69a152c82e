#include "sgwc/binary_io.hpp"

#include <cstdio>
#include <filesystem>

namespace sgwc {

void atomic_file_write(const std::string& path,
                       const std::function<void(BinaryWriter&)>& fill)
{
    // Unique-ish temp name in the destination directory so the final rename
    // stays on one filesystem.
    std::string tmp = path + ".tmp" + std::to_string(
        static_cast<unsigned long long>(
            std::hash<std::string>{}(path) ^
            static_cast<std::size_t>(now_seconds() * 1e9)));
    try {
        {
            BinaryWriter w(tmp);
            fill(w);
            w.finish();
        }
        std::filesystem::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
}

}  // namespace sgwc
