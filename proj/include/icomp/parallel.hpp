#pragma once

// Row-parallel loop helper shared by every image kernel. Each kernel is
// written once as a per-row body; Exec::serial runs the rows in order on the
// calling thread and is the reference the OpenMP path is tested against.

namespace icomp {

enum class Exec { serial, parallel };

template <class RowFn>
void for_rows(int rows, Exec exec, RowFn&& body) {
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (int y = 0; y < rows; ++y) body(y);
    } else {
        for (int y = 0; y < rows; ++y) body(y);
    }
}

int max_threads();

}  // namespace icomp
