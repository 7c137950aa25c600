#include "pso/distributions.hpp"

namespace pso {

namespace {

// Row-major 20x20 rotation with determinant 1.
constexpr double kTransform[400] = {
    0.190704135, -0.103706818, 0.287080085, -0.224115607, -0.0296220322, -0.200017067, 0.107420472, 0.145939799, -0.21151047, 0.290260037, -0.109926743, -0.138214861, 0.0739138407, -0.173910764, -0.158279581, -0.138856972, -0.512741096, -0.0894244111, -0.465075432, 0.138203328,
    0.254157669, 0.00972120677, -0.425381258, -0.165311223, -0.0732519109, 0.316785766, -0.0651314216, -0.153534853, -0.294111694, -0.29775682, -0.285308807, 0.12228138, -0.11072477, -0.0955035066, 0.00942833152, -0.252106498, -0.40791915, 0.14810246, 0.219848116, 0.0170452831,
    0.213837698, 0.435577026, -0.0250319656, 0.297552176, 0.14030724, 0.17703815, 0.179253182, -0.0710653564, 0.0507340489, 0.235684257, 0.33391508, -0.40609493, -0.197930666, -0.322136609, -0.146204612, -0.164195869, -0.0672063429, 0.138970011, 0.121959537, -0.150499483,
    0.229971825, 0.235126465, 0.158420112, -0.0223857003, 0.28726862, 0.133325519, -0.352231148, 0.403451114, -0.0161522847, -0.0193998935, 0.0455239109, 0.162348247, -0.108553457, -0.126312424, 0.354695129, -0.18792775, 0.101384726, -0.360466001, 0.0797850581, 0.338497968,
    0.168709235, 0.0770914534, -0.178165495, -0.0661545928, 0.323673824, -0.216202087, 0.475022027, 0.129138946, -0.0173273685, -0.305472906, -0.187205709, -0.0359566427, -0.216262061, -0.0428909211, -0.354871726, 0.299579441, 0.157803981, -0.190573488, 0.0280581785, 0.281767192,
    0.238265575, 0.14326338, 0.323225051, 0.101182056, 0.222068216, -0.42470829, -0.132128709, -0.203895612, -0.38640015, -0.193494524, 0.15340899, 0.0919709633, -0.150512414, 0.257608882, 0.182536036, 0.223159059, -0.177186352, 0.198776911, 0.130192805, -0.201342323,
    0.279579926, -0.162797928, -0.0586375005, -0.211398563, -0.178520507, -0.0154862203, -0.371463145, 0.187233788, -0.19506691, 0.119455231, -0.202696444, -0.581504491, -0.160227753, 0.135365515, -0.104123883, 0.128700751, 0.341221005, 0.04776047, 0.0956523695, -0.105994479,
    0.220148935, -0.2672238, 0.259200965, -0.348342982, 0.155930129, 0.0194560055, 0.136887538, -0.264686829, 0.243602026, 0.117285157, -0.002458813, 0.241121126, -0.423370778, 0.01867544, -0.0604651676, -0.397344315, 0.273889032, 0.122122216, 0.00146222648, -0.125711392,
    0.274834233, 0.105359473, 0.135585987, -0.19681974, -0.0573374634, 0.272574082, 0.0741237415, 0.0122961299, 0.331281502, -0.33605766, 0.271171768, -0.205618232, 0.213806318, 0.535961439, -0.103513592, -0.0402908492, -0.199964863, -0.203164108, -0.0657867077, -0.0601941311,
    0.191457811, -0.234983092, 0.180777146, 0.293340161, -0.0365900702, 0.214595475, 0.236285794, 0.256954426, 0.152660465, 0.0502990912, -0.34518931, 0.0711801608, -0.128073093, -0.0785011303, 0.222291071, 0.252921604, -0.174804068, -0.217786875, 0.114727637, -0.492946359,
    0.223304218, -0.0257257131, -0.413566391, 0.172073687, 0.326658323, -0.251109479, -0.188027609, 0.334468985, 0.161164411, 0.150742708, -0.0165671389, 0.232902107, 0.21926384, 0.194760411, -0.235966926, -0.210659524, -0.00475631985, 0.172782694, -0.148866241, -0.300869538,
    0.243388344, 0.243683991, -0.121589184, -0.187437781, 0.0578409285, -0.27767391, 0.118032949, -0.346625601, 0.292226942, 0.243065097, -0.348108205, -0.141543891, 0.37738745, -0.0330943339, 0.390702777, 0.02656679, 0.0292203222, -0.0520266353, 0.165078206, 0.0596683021,
    0.230141811, 0.0247039796, -0.160146528, 0.276454478, -0.576178718, -0.329822403, 0.25548108, 0.14013065, -0.0103114951, -0.162178682, 0.0992219866, 0.012231234, -0.189306474, 0.0930990418, 0.282716476, -0.306277128, 0.142988577, -0.00844652753, -0.179308874, 0.106622196,
    0.232700446, -0.203358735, -0.0404096623, 0.0651155788, -0.0876307509, -0.191362905, -0.350703084, -0.292134625, 0.189041139, -0.344463408, 0.182873652, 0.00843615229, 0.103973847, -0.52808934, -0.153969081, 0.0920142117, 0.0274541623, -0.30781733, -0.126023284, -0.157587751,
    0.199527977, 0.204898606, -0.0450516851, -0.270830109, -0.122669508, 0.203103159, 0.237732868, 0.012741777, -0.462819922, 0.114896626, 0.187819585, 0.289174359, 0.310962024, -0.0974490092, -0.00676534358, 0.104883625, 0.361388813, -0.151993161, -0.133748076, -0.307757495,
    0.175957009, 0.114449497, 0.0205901599, -0.309807805, -0.235656127, 0.00557129199, -0.0424724202, 0.307742364, 0.323261613, -0.00822297356, 0.171003077, 0.20675015, -0.0593725006, -0.232062167, 0.0481299972, 0.415888833, -0.102561506, 0.524594092, 0.0346260903, 0.106458345,
    0.223633992, -0.408554226, -0.309022911, 0.131333656, 0.253238692, 0.245874156, 0.0563174345, -0.203397977, -0.0592004594, 0.179237363, 0.275909961, -0.0735710289, -0.0681467794, 0.0974804318, 0.340180897, 0.282145806, -0.0050587548, 0.0683927742, -0.329991983, 0.246896636,
    0.215583387, 0.212554612, 0.289443614, 0.366636519, -0.034606719, 0.274097732, -0.127438501, -0.179674304, 0.0238811214, -0.126780371, -0.419167616, 0.0954798128, 0.126317847, 0.0330201935, -0.166833728, 0.039242297, 0.231007699, 0.29173484, -0.381428263, 0.182896273,
    0.210225414, -0.42839288, 0.239002756, 0.174593297, 0.0372987005, -0.000156767089, 0.183766314, 0.132302659, -0.124351715, -0.0656208547, 0.126841957, -0.0486788409, 0.471440044, -0.112599645, -0.0828678102, -0.173846575, 0.0871950404, 0.210646003, 0.459392924, 0.242375288,
    0.220671036, 0.0270987729, -0.0325243953, 0.176295746, -0.299408603, -0.00284534072, -0.133474574, -0.186385408, 0.0205827025, 0.45209226, 0.0583508015, 0.321753008, -0.120986377, 0.217766867, -0.359227919, 0.180578462, -0.115873733, -0.281505687, 0.296303031, 0.245563455,
};

}  // namespace

const Matrix& embedded_transform() {
  static const Matrix A = Eigen::Map<const Matrix>(kTransform, 20, 20);
  return A;
}

}  // namespace pso
