#include <catch_amalgamated.hpp>

#include "rulegen/rulegen.hpp"
#include "support.hpp"

using namespace rulegen;

TEST_CASE("csv parser handles plain tables", "[dataio]") {
    const auto t = parse_csv_text("a,b,c\n1,2,3\n4,5,6\n");
    REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    REQUIRE(t.rows[1] == std::vector<std::string>{"4", "5", "6"});
}

TEST_CASE("csv parser handles quoting, CRLF and embedded breaks", "[dataio]") {
    const std::string text =
        "name,note\r\n"
        "\"Doe, Jane\",\"said \"\"hi\"\"\"\r\n"
        "plain,\"line1\nline2\"\r\n";
    const auto t = parse_csv_text(text);
    REQUIRE(t.rows.size() == 2);
    REQUIRE(t.rows[0][0] == "Doe, Jane");
    REQUIRE(t.rows[0][1] == "said \"hi\"");
    REQUIRE(t.rows[1][1] == "line1\nline2");
}

TEST_CASE("csv parser accepts a missing trailing newline", "[dataio]") {
    const auto t = parse_csv_text("a,b\n1,2");
    REQUIRE(t.rows.size() == 1);
    REQUIRE(t.rows[0][1] == "2");
}

TEST_CASE("csv parser rejects ragged rows and empty input", "[dataio]") {
    REQUIRE_THROWS_AS(parse_csv_text("a,b\n1,2,3\n"), DataError);
    REQUIRE_THROWS_AS(parse_csv_text(""), DataError);
    REQUIRE_THROWS_AS(parse_csv_text("a,b\n\"unterminated"), DataError);
}

TEST_CASE("encode_training maps numerics, classes and groups", "[dataio]") {
    Schema schema;
    schema.target_column = "cls";
    schema.group_column = "grp";
    schema.positive_class = "yes";
    const auto t = parse_csv_text(
        "x,cls,grp,y\n"
        "1.5,no,m,2\n"
        "2.5,yes,f,4\n"
        "0.5,no,f,6\n");
    const Dataset ds = encode_training(t, schema);
    REQUIRE(ds.n_rows == 3);
    REQUIRE(ds.n_features == 2);
    REQUIRE(ds.feature_meta[0].name == "x");
    REQUIRE(ds.feature_meta[1].name == "y");
    REQUIRE(ds.class_order == std::vector<std::string>{"no", "yes"});
    REQUIRE(ds.labels == std::vector<int>{0, 1, 0});
    REQUIRE(ds.group_order == std::vector<std::string>{"m", "f"});
    REQUIRE(ds.groups == std::vector<int>{0, 1, 1});
    REQUIRE(ds.positive_class == 1);
    REQUIRE(ds.x(1, 0) == 2.5);
    REQUIRE(ds.x(2, 1) == 6.0);
}

TEST_CASE("encode_training one-hot expands categoricals in place", "[dataio]") {
    Schema schema;
    schema.target_column = "cls";
    schema.categorical_columns = {"color"};
    const auto t = parse_csv_text(
        "color,size,cls\n"
        "red,1,a\n"
        "blue,2,b\n"
        "red,3,a\n"
        "green,4,b\n");
    const Dataset ds = encode_training(t, schema);
    REQUIRE(ds.n_features == 4);  // red, blue, green, size
    REQUIRE(ds.feature_meta[0].name == "color=red");
    REQUIRE(ds.feature_meta[1].name == "color=blue");
    REQUIRE(ds.feature_meta[2].name == "color=green");
    REQUIRE(ds.feature_meta[2].kind == FeatureKind::OneHot);
    REQUIRE(ds.feature_meta[3].name == "size");
    REQUIRE(ds.feature_meta[3].kind == FeatureKind::Numeric);
    REQUIRE(ds.x(0, 0) == 1.0);
    REQUIRE(ds.x(0, 1) == 0.0);
    REQUIRE(ds.x(3, 2) == 1.0);
    REQUIRE(ds.x(3, 3) == 4.0);
}

TEST_CASE("encode_training rejects bad schemas and bad values", "[dataio]") {
    Schema schema;
    schema.target_column = "cls";
    REQUIRE_THROWS_AS(encode_training(parse_csv_text("x,cls\n1,a\n2,a\n"), schema),
                      DataError);  // single class
    REQUIRE_THROWS_AS(encode_training(parse_csv_text("x,y\n1,2\n"), schema),
                      DataError);  // target column missing
    REQUIRE_THROWS_AS(encode_training(parse_csv_text("x,x,cls\n1,2,a\n3,4,b\n"), schema),
                      DataError);  // duplicate header
    Schema pos = schema;
    pos.positive_class = "zebra";
    REQUIRE_THROWS_AS(encode_training(parse_csv_text("x,cls\n1,a\n2,b\n"), pos),
                      DataError);  // positive class never appears
    try {
        encode_training(parse_csv_text("x,cls\n1,a\noops,b\n"), schema);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("oops") != std::string::npos);
        REQUIRE(msg.find("x") != std::string::npos);
        REQUIRE(msg.find("2") != std::string::npos);  // 1-based data row
    }
    REQUIRE_THROWS_AS(encode_training(parse_csv_text("x,cls\n1,a\n,b\n"), schema),
                      DataError);  // missing value
    Schema cat = schema;
    cat.categorical_columns = {"nope"};
    REQUIRE_THROWS_AS(encode_training(parse_csv_text("x,cls\n1,a\n2,b\n"), cat),
                      DataError);
}

TEST_CASE("subset keeps vocabularies and checks indices", "[dataio]") {
    const Dataset ds = support::make_synthetic(20, 3, 3, 7);
    const Dataset sub = subset(ds, {5, 1, 19});
    REQUIRE(sub.n_rows == 3);
    REQUIRE(sub.class_count == ds.class_count);
    REQUIRE(sub.class_order == ds.class_order);
    REQUIRE(sub.labels[0] == ds.labels[5]);
    REQUIRE(sub.labels[2] == ds.labels[19]);
    REQUIRE(sub.x(1, 2) == ds.x(1, 2));
    REQUIRE_THROWS_AS(subset(ds, {20}), IndexError);
    REQUIRE_THROWS_AS(subset(ds, {-1}), IndexError);
}

TEST_CASE("kappa fixtures", "[dataio]") {
    REQUIRE(kappa(2) == Catch::Approx(0.5));
    REQUIRE(kappa(3) == Catch::Approx(2.0 / 3.0));
    REQUIRE(kappa(5) == Catch::Approx(0.8));
    REQUIRE_THROWS_AS(kappa(1), ArgumentError);
}

TEST_CASE("class vectors hit the fixture values", "[dataio]") {
    REQUIRE(class_vector(0, 2) == std::vector<double>{1.0, -1.0});
    REQUIRE(class_vector(1, 2) == std::vector<double>{-1.0, 1.0});
    const auto v3 = class_vector(0, 3);
    REQUIRE(v3[0] == Catch::Approx(1.0));
    REQUIRE(v3[1] == Catch::Approx(-0.5));
    REQUIRE(v3[2] == Catch::Approx(-0.5));
    REQUIRE_THROWS_AS(class_vector(2, 2), IndexError);
    REQUIRE_THROWS_AS(class_vector(-1, 2), IndexError);
    REQUIRE_THROWS_AS(class_vector(0, 1), ArgumentError);
}

TEST_CASE("class vector identities hold for K up to 10", "[dataio]") {
    for (int K = 2; K <= 10; ++K) {
        for (int k = 0; k < K; ++k) {
            const auto v = class_vector(k, K);
            double sum = 0.0, norm2 = 0.0;
            for (const double c : v) {
                sum += c;
                norm2 += c * c;
            }
            REQUIRE(sum == Catch::Approx(0.0).margin(1e-12));
            REQUIRE(norm2 == Catch::Approx(static_cast<double>(K) / (K - 1)));
            REQUIRE(kappa(K) * norm2 == Catch::Approx(1.0));
        }
        // Distinct class vectors have inner product -1/(K-1) * K/(K-1).
        const auto a = class_vector(0, K);
        const auto b = class_vector(K - 1, K);
        double dot = 0.0;
        for (int i = 0; i < K; ++i) dot += a[i] * b[i];
        const double expected = -2.0 / (K - 1) + (K - 2) / ((K - 1.0) * (K - 1.0));
        REQUIRE(dot == Catch::Approx(expected));
    }
}

TEST_CASE("split candidates are midpoints of distinct values", "[dataio]") {
    REQUIRE(split_candidates({1.0, 3.0, 2.0, 3.0}) == std::vector<double>{1.5, 2.5});
    REQUIRE(split_candidates({4.0, 4.0, 4.0}).empty());
    REQUIRE_THROWS_AS(split_candidates({}), ArgumentError);
    const Dataset ds = support::make_separable(4);
    REQUIRE(feature_split_candidates(ds, 0) == std::vector<double>{1.0});
    REQUIRE_THROWS_AS(feature_split_candidates(ds, 2), IndexError);
}

TEST_CASE("schema json round trip", "[dataio]") {
    Schema s;
    s.target_column = "y";
    s.categorical_columns = {"a", "b"};
    s.group_column = "g";
    const Schema back = schema_from_json(schema_to_json(s));
    REQUIRE(back.target_column == "y");
    REQUIRE(back.categorical_columns == s.categorical_columns);
    REQUIRE(back.group_column.has_value());
    REQUIRE(*back.group_column == "g");
    REQUIRE_FALSE(back.positive_class.has_value());
    REQUIRE_THROWS_AS(schema_from_json(nlohmann::json::array()), DataError);
    REQUIRE_THROWS_AS(schema_from_json(nlohmann::json::object()), DataError);
}

TEST_CASE("tic-tac-toe corpus has the canonical shape", "[dataio]") {
    const Dataset ds = support::tictactoe_dataset();
    REQUIRE(ds.n_rows == 958);
    REQUIRE(ds.class_count == 2);
    REQUIRE(ds.n_features == 27);  // 9 cells x 3 symbols
    int positive = 0;
    for (const int y : ds.labels) {
        if (ds.class_order[y] == "positive") ++positive;
    }
    REQUIRE(positive == 626);
    REQUIRE(ds.n_rows - positive == 332);
}
