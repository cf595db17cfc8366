#include "icomp/error.hpp"

#include <omp.h>

#include "icomp/parallel.hpp"

namespace icomp {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::NonFinite: return "non-finite value";
        case ErrorCode::DimensionMismatch: return "dimension mismatch";
        case ErrorCode::MalformedHeader: return "malformed header";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::EmptyMask: return "empty mask";
        case ErrorCode::InvalidBundle: return "invalid bundle";
        case ErrorCode::RendererFailure: return "renderer failure";
        case ErrorCode::Timeout: return "timeout";
    }
    return "unknown";
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace icomp
