#include "gcgm/loss.hpp"

#include "text_reader.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace gcgm {
namespace {

// log(1 + exp(u)) without overflow.
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

// 1 / (1 + exp(-u)) without overflow.
double sigmoid(double u) {
    if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

void validate(const DataMatrix& data) {
    require(data.A.rows() >= 1 && data.A.cols() >= 1, "loss: data must have n >= 1 and d >= 1");
    require(data.b.size() == data.A.rows(), "loss: target length must equal the sample count");
    require(data.A.allFinite() && data.b.allFinite(), "loss: data must be finite");
}

}  // namespace

Loss Loss::quadratic(DataMatrix data) {
    validate(data);
    return Loss(Kind::Quadratic, std::make_shared<const DataMatrix>(std::move(data)));
}

Loss Loss::logistic(DataMatrix data) {
    validate(data);
    for (Eigen::Index i = 0; i < data.b.size(); ++i) {
        require(data.b(i) == 1.0 || data.b(i) == -1.0, "logistic loss: labels must be -1 or +1");
    }
    return Loss(Kind::Logistic, std::make_shared<const DataMatrix>(std::move(data)));
}

Vector Loss::predict(const Vector& x) const {
    require(x.size() == dimension(), "loss: dimension mismatch");
    return data_->A * x;
}

double Loss::value(const Vector& x) const { return value_at_prediction(predict(x)); }

Vector Loss::gradient(const Vector& x) const { return gradient_at_prediction(predict(x)); }

double Loss::value_at_prediction(const Vector& pred) const {
    require(pred.size() == data_->samples(), "loss: prediction length mismatch");
    const Vector& b = data_->b;
    switch (kind_) {
        case Kind::Quadratic:
            return 0.5 * (pred - b).squaredNorm();
        case Kind::Logistic: {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < pred.size(); ++i) acc += softplus(-b(i) * pred(i));
            return acc / static_cast<double>(pred.size());
        }
    }
    return 0.0;
}

Vector Loss::gradient_at_prediction(const Vector& pred) const {
    require(pred.size() == data_->samples(), "loss: prediction length mismatch");
    const Vector& b = data_->b;
    Vector r(pred.size());
    switch (kind_) {
        case Kind::Quadratic:
            r = pred - b;
            break;
        case Kind::Logistic: {
            const double inv_n = 1.0 / static_cast<double>(pred.size());
            for (Eigen::Index i = 0; i < pred.size(); ++i) r(i) = -b(i) * sigmoid(-b(i) * pred(i)) * inv_n;
            break;
        }
    }
    return data_->A.transpose() * r;
}

Vector Loss::curvature_weights(const Vector& pred) const {
    require(pred.size() == data_->samples(), "loss: prediction length mismatch");
    switch (kind_) {
        case Kind::Quadratic:
            return Vector::Ones(pred.size());
        case Kind::Logistic: {
            Vector w(pred.size());
            const double inv_n = 1.0 / static_cast<double>(pred.size());
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
                const double s = sigmoid(pred(i));
                w(i) = s * (1.0 - s) * inv_n;
            }
            return w;
        }
    }
    return {};
}

double Loss::curvature_bound() const noexcept {
    return kind_ == Kind::Quadratic ? 1.0 : 0.25 / static_cast<double>(data_->samples());
}

Loss Loss::composed_with(const Matrix& map) const {
    require(map.rows() == dimension(), "composed_with: map row count must equal the dimension");
    DataMatrix d{data_->A * map, data_->b};
    return Loss(kind_, std::make_shared<const DataMatrix>(std::move(d)));
}

std::string Loss::describe() const {
    std::ostringstream os;
    os << (kind_ == Kind::Quadratic ? "quadratic" : "logistic") << "(n=" << data_->samples()
       << ",d=" << data_->features() << ")";
    return os.str();
}

double smoothness_wrt(const Loss& loss, const AtomicSet& set) {
    require(set.dimension() == loss.dimension(), "smoothness_wrt: dimension mismatch");
    const Matrix& A = loss.data().A;
    const double C = set.scale();
    const double g2 = loss.curvature_bound();
    switch (set.kind()) {
        case AtomicSet::Kind::SignedBasis:
            return g2 * C * C * A.colwise().squaredNorm().maxCoeff();
        case AtomicSet::Kind::HypercubeVertices: {
            const double s = A.colwise().norm().sum();
            return g2 * C * C * s * s;
        }
        case AtomicSet::Kind::ExplicitList: {
            // Negated atoms only flip signs of Gram entries, so |G| over P covers P u -P.
            const Matrix AP = C * (A * set.base_atoms());
            const Matrix G = AP.transpose() * AP;
            return g2 * G.cwiseAbs().maxCoeff();
        }
    }
    return kInfinity;
}

DataMatrix load_data_csv(const std::string& path) {
    TextReader in = TextReader::open(path);
    const auto header_at = in.offset();
    const auto n = in.integer();
    const auto d = in.integer();
    if (n < 1 || d < 1) throw FormatError("data file: n and d must be positive", header_at);
    in.end_of_line();
    DataMatrix data{Matrix(n, d), Vector(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) data.A(i, k) = in.real();
        data.b(i) = in.real();
        in.end_of_line();
    }
    in.expect_eof();
    return data;
}

void save_data_csv(const DataMatrix& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << std::setprecision(17);
    out << data.samples() << ' ' << data.features() << '\n';
    for (Eigen::Index i = 0; i < data.samples(); ++i) {
        for (Eigen::Index k = 0; k < data.features(); ++k) out << data.A(i, k) << ',';
        out << data.b(i) << '\n';
    }
}

}  // namespace gcgm
