// Identity renderer for the bridge protocol: writes albedo * shading.
//   icomp-stub-renderer <bundle_dir> <output_pfm> [--seed <int>]
// Exit codes: 0 ok, 1 usage, 2 malformed bundle.

#include <cstdlib>
#include <iostream>
#include <string>

#include "icomp/intrinsics.hpp"
#include "icomp/pfm.hpp"

int main(int argc, char** argv) {
    if (argc != 3 && argc != 5) {
        std::cerr << "usage: " << argv[0] << " <bundle_dir> <output_pfm> [--seed <int>]\n";
        return 1;
    }
    if (argc == 5) {
        char* end = nullptr;
        std::strtoll(argv[4], &end, 10);
        if (std::string(argv[3]) != "--seed" || *end != '\0') {
            std::cerr << "expected --seed <int>\n";
            return 1;
        }
    }
    try {
        const icomp::IntrinsicBundle bundle = icomp::read_bundle(argv[1]);
        icomp::validate_bundle(bundle);
        icomp::write_pfm(argv[2], icomp::reconstruct_image(bundle.albedo, bundle.shading));
    } catch (const std::exception& e) {
        std::cerr << "stub renderer: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
