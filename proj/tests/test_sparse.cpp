#include <catch2/catch_amalgamated.hpp>

#include "ldm/sparse.hpp"

#include "support/fixtures.hpp"

using ldm::SparseMatrix;
using ldm::Triplet;

TEST_CASE("from_triplets builds valid CSR") {
    SparseMatrix m = SparseMatrix::from_triplets(3, 4, {{2, 1, 5.0}, {0, 3, 1.0}, {0, 0, 2.0}});
    REQUIRE(m.rows() == 3);
    REQUIRE(m.cols() == 4);
    REQUIRE(m.nnz() == 3);
    CHECK(m.row_nnz(0) == 2);
    CHECK(m.row_nnz(1) == 0);
    CHECK(m.at(0, 0) == 2.0);
    CHECK(m.at(0, 3) == 1.0);
    CHECK(m.at(2, 1) == 5.0);
    CHECK(m.at(1, 2) == 0.0);
}

TEST_CASE("from_triplets rejects duplicates and bad indices") {
    CHECK_THROWS(SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}));
    CHECK_THROWS(SparseMatrix::from_triplets(2, 2, {{0, 2, 1.0}}));
    CHECK_THROWS(SparseMatrix(1, 1, {0, 1}, {0}, {std::nan("")}));
}

TEST_CASE("triplet round trip is the identity") {
    ldm::SplitMix64 rng(11);
    for (int round = 0; round < 20; ++round) {
        ldm::SparseMatrix m = fixtures::random_sparse_points(15, 9, 0.3, rng.next());
        auto triplets = m.to_triplets();
        ldm::SparseMatrix back = SparseMatrix::from_triplets(m.rows(), m.cols(), triplets);
        CHECK(back.row_ptr() == m.row_ptr());
        CHECK(back.col_idx() == m.col_idx());
        CHECK(back.values() == m.values());
    }
}

TEST_CASE("transpose twice is the identity and flips entries") {
    SparseMatrix m = SparseMatrix::from_triplets(2, 3, {{0, 2, 1.5}, {1, 0, -2.0}});
    SparseMatrix t = m.transpose();
    REQUIRE(t.rows() == 3);
    CHECK(t.at(2, 0) == 1.5);
    CHECK(t.at(0, 1) == -2.0);
    SparseMatrix tt = t.transpose();
    CHECK(tt.row_ptr() == m.row_ptr());
    CHECK(tt.col_idx() == m.col_idx());
    CHECK(tt.values() == m.values());
}

TEST_CASE("sparse squared distance") {
    SECTION("identical rows give zero") {
        SparseMatrix m = SparseMatrix::from_triplets(2, 8, {{0, 1, 3.0}, {0, 5, 2.0}, {1, 1, 3.0}, {1, 5, 2.0}});
        CHECK(ldm::sparse_sq_distance(m, 0, 1) == 0.0);
    }
    SECTION("disjoint support sums both norms") {
        SparseMatrix m = SparseMatrix::from_triplets(2, 8, {{0, 0, 5.0}, {1, 1, 3.0}});
        CHECK(ldm::sparse_sq_distance(m, 0, 1) == 34.0);  // 25 + 9
    }
    SECTION("shared support uses the difference") {
        SparseMatrix m = SparseMatrix::from_triplets(2, 8, {{0, 0, 5.0}, {1, 0, 3.0}});
        CHECK(ldm::sparse_sq_distance(m, 0, 1) == 4.0);  // (5-3)^2
    }
    SECTION("argument order does not change the result bit for bit") {
        ldm::SplitMix64 rng(3);
        SparseMatrix m = fixtures::random_sparse_points(10, 20, 0.4, rng.next());
        for (ldm::index_t a = 0; a < m.rows(); ++a)
            for (ldm::index_t b = 0; b < m.rows(); ++b)
                CHECK(ldm::sparse_sq_distance(m, a, b) == ldm::sparse_sq_distance(m, b, a));
    }
}
