#include "medspec/model_io.hpp"

#include <fstream>
#include <json.hpp>

#include "medspec/error.hpp"

namespace medspec {

using nlohmann::json;
using nn::Matrix;
using nn::Param;

namespace {

json tensor_json(std::string_view name, const Matrix& m) {
    return {{"name", name},
            {"shape", {m.rows(), m.cols()}},
            {"values", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix tensor_from_json(const json& t, std::size_t rows, std::size_t cols) {
    const auto name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != rows || shape[1] != cols) {
        throw ModelFormatError("tensor '" + name + "' has shape inconsistent with hyperparams");
    }
    const auto values = t.at("values").get<std::vector<double>>();
    if (values.size() != rows * cols) {
        throw ModelFormatError("tensor '" + name + "' payload has " + std::to_string(values.size()) +
                               " values, expected " + std::to_string(rows * cols));
    }
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

std::pair<std::size_t, std::size_t> expected_shape(Param p, const nn::ModelDims& d) {
    switch (p) {
        case Param::embedding: return {d.vocab, d.embed};
        case Param::dense1_w: return {d.seq_len * d.embed, d.hidden1};
        case Param::dense1_b:
        case Param::bn_gamma:
        case Param::bn_beta: return {1, d.hidden1};
        case Param::dense2_w: return {d.hidden1, d.hidden2};
        case Param::dense2_b: return {1, d.hidden2};
        case Param::dense3_w: return {d.hidden2, d.hidden3};
        case Param::dense3_b: return {1, d.hidden3};
        case Param::output_w: return {d.hidden3, d.classes};
        case Param::output_b: return {1, d.classes};
    }
    return {0, 0};
}

}  // namespace

void save_model(const ModelBundle& model, const std::filesystem::path& path) {
    const auto& p = model.params;
    json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["hyperparams"] = {
        {"vocab", p.dims.vocab},     {"embed", p.dims.embed},
        {"seq_len", p.dims.seq_len}, {"hidden1", p.dims.hidden1},
        {"hidden2", p.dims.hidden2}, {"hidden3", p.dims.hidden3},
        {"classes", p.dims.classes}, {"bn_epsilon", p.bn.epsilon},
        {"bn_momentum", p.bn.momentum},
    };
    doc["input_field"] = to_string(model.input_field);
    doc["labels"] = model.catalog.labels();
    doc["vocabulary"] = {{"min_count", model.vocab.min_count()}, {"tokens", model.vocab.tokens()}};
    doc["stopwords"] = model.stopwords.words();

    json tensors = json::array();
    for (std::size_t i = 0; i < nn::kParamCount; ++i) {
        tensors.push_back(tensor_json(nn::param_name(nn::param_at(i)), p.learn.tensors[i]));
    }
    tensors.push_back(tensor_json("batchnorm.running_mean", p.running_mean));
    tensors.push_back(tensor_json("batchnorm.running_var", p.running_var));
    doc["tensors"] = std::move(tensors);

    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write model file '" + path.string() + "'");
        }
        out << doc.dump() << '\n';
        if (!out) {
            throw DataError("failed writing model file '" + path.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ModelFormatError("cannot open model file '" + path.string() + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ModelFormatError("model file '" + path.string() + "' does not parse: " + e.what());
    }

    try {
        const int version = doc.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw ModelFormatError("unsupported model format_version " + std::to_string(version) +
                                   " (this build reads version " +
                                   std::to_string(kModelFormatVersion) + ")");
        }
        ModelBundle m;
        const auto& hp = doc.at("hyperparams");
        auto& dims = m.params.dims;
        dims.vocab = hp.at("vocab").get<std::size_t>();
        dims.embed = hp.at("embed").get<std::size_t>();
        dims.seq_len = hp.at("seq_len").get<std::size_t>();
        dims.hidden1 = hp.at("hidden1").get<std::size_t>();
        dims.hidden2 = hp.at("hidden2").get<std::size_t>();
        dims.hidden3 = hp.at("hidden3").get<std::size_t>();
        dims.classes = hp.at("classes").get<std::size_t>();
        m.params.bn.epsilon = hp.at("bn_epsilon").get<double>();
        m.params.bn.momentum = hp.at("bn_momentum").get<double>();

        m.input_field = parse_input_field(doc.at("input_field").get<std::string>());
        m.catalog = LabelCatalog(doc.at("labels").get<std::vector<std::string>>());
        m.vocab = Vocabulary::from_tokens(doc.at("vocabulary").at("tokens").get<std::vector<std::string>>(),
                                          doc.at("vocabulary").at("min_count").get<std::size_t>());
        m.stopwords = StopwordList(doc.at("stopwords").get<std::vector<std::string>>());
        if (m.catalog.size() != dims.classes) {
            throw ModelFormatError("label count does not match declared classes");
        }
        if (m.vocab.size() != dims.vocab) {
            throw ModelFormatError("vocabulary size does not match declared vocab");
        }

        const auto& tensors = doc.at("tensors");
        if (tensors.size() != nn::kParamCount + 2) {
            throw ModelFormatError("model file has " + std::to_string(tensors.size()) +
                                   " tensors, expected " + std::to_string(nn::kParamCount + 2));
        }
        for (std::size_t i = 0; i < nn::kParamCount; ++i) {
            const Param p = nn::param_at(i);
            if (tensors[i].at("name").get<std::string>() != nn::param_name(p)) {
                throw ModelFormatError("unexpected tensor order at position " + std::to_string(i));
            }
            const auto [rows, cols] = expected_shape(p, dims);
            m.params.learn[p] = tensor_from_json(tensors[i], rows, cols);
        }
        m.params.running_mean = tensor_from_json(tensors[nn::kParamCount], 1, dims.hidden1).row(0);
        m.params.running_var = tensor_from_json(tensors[nn::kParamCount + 1], 1, dims.hidden1).row(0);
        return m;
    } catch (const json::exception& e) {
        throw ModelFormatError("model file '" + path.string() + "' is malformed: " + e.what());
    } catch (const ModelFormatError&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw ModelFormatError(std::string("model file is malformed: ") + e.what());
    }
}

}  // namespace medspec
