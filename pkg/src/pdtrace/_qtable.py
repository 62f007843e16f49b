"""Upper critical values of the studentized range, q(alpha; k, df).

Generated by tools/make_qtable.py; do not edit by hand.
"""

KS = (2, 3, 4, 5, 6, 7, 8, 9, 10)
DFS = (2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 24, 30, 40, 60, 120)

# QTABLE[alpha][k] lists q for each df in DFS, then df = infinity
QTABLE = {
    0.05: {
        2: (6.084870, 4.500659, 3.926486, 3.635352, 3.460456, 3.344084, 3.261182, 3.199173, 3.151064, 3.112663, 3.081307, 3.055223, 3.033186, 3.014325, 2.997999, 2.983730, 2.971152, 2.959983, 2.949998, 2.918793, 2.888209, 2.858232, 2.828848, 2.800044, 2.771808),
        3: (8.330783, 5.909598, 5.040241, 4.601726, 4.339195, 4.164941, 4.041036, 3.948492, 3.876777, 3.819588, 3.772929, 3.734142, 3.701394, 3.673378, 3.649139, 3.627963, 3.609304, 3.592739, 3.577935, 3.531697, 3.486420, 3.442082, 3.398661, 3.356138, 3.314493),
        4: (9.798045, 6.824526, 5.757060, 5.218325, 4.895599, 4.681276, 4.528810, 4.414890, 4.326582, 4.256143, 4.198660, 4.150866, 4.110506, 4.075974, 4.046093, 4.019985, 3.996978, 3.976551, 3.958294, 3.901262, 3.845401, 3.790685, 3.737089, 3.684589, 3.633160),
        5: (10.881114, 7.501672, 6.287027, 5.673124, 5.304891, 5.060074, 4.885754, 4.755404, 4.654293, 4.573596, 4.507710, 4.452906, 4.406610, 4.366985, 4.332688, 4.302713, 4.276293, 4.252831, 4.231857, 4.166314, 4.102079, 4.039123, 3.977418, 3.916938, 3.857656),
        6: (11.734297, 8.037085, 6.706438, 6.032903, 5.628353, 5.359079, 5.167152, 5.023515, 4.912016, 4.822972, 4.750231, 4.689697, 4.638538, 4.594735, 4.556809, 4.523653, 4.494420, 4.468454, 4.445237, 4.372651, 4.301464, 4.231644, 4.163161, 4.095986, 4.030092),
        7: (12.434917, 8.478309, 7.052554, 6.329901, 5.895309, 5.605721, 5.399121, 5.244374, 5.124166, 5.028108, 4.949594, 4.884224, 4.828954, 4.781614, 4.740611, 4.704754, 4.673132, 4.645036, 4.619908, 4.541314, 4.464177, 4.388464, 4.314143, 4.241182, 4.169554),
        8: (13.027254, 8.852497, 7.346519, 6.582301, 6.122202, 5.815314, 5.596180, 5.431921, 5.304238, 5.202147, 5.118658, 5.049115, 4.990292, 4.939890, 4.896220, 4.858020, 4.824322, 4.794374, 4.767584, 4.683752, 4.601415, 4.520535, 4.441079, 4.363013, 4.286309),
        9: (13.538976, 9.176626, 7.601520, 6.801398, 6.319211, 5.997305, 5.767266, 5.594712, 5.460499, 5.353127, 5.265278, 5.192070, 5.130124, 5.077026, 5.031007, 4.990740, 4.955209, 4.923625, 4.895365, 4.806894, 4.719938, 4.634457, 4.550414, 4.467775, 4.386509),
        10: (13.988491, 9.462010, 7.826335, 6.994698, 6.493085, 6.157944, 5.918277, 5.738386, 5.598386, 5.486330, 5.394605, 5.318137, 5.253408, 5.197907, 5.149791, 5.107677, 5.070507, 5.037459, 5.007883, 4.915250, 4.824141, 4.734513, 4.646324, 4.559538, 4.474124),
    },
    0.01: {
        2: (14.035848, 8.260293, 6.511173, 5.702311, 5.243095, 4.949017, 4.745234, 4.595961, 4.482028, 4.392274, 4.319771, 4.260001, 4.209891, 4.167281, 4.130609, 4.098717, 4.070730, 4.045973, 4.023918, 3.955470, 3.889081, 3.824683, 3.762208, 3.701592, 3.642773),
        3: (19.018936, 10.618540, 8.119792, 6.975737, 6.330508, 5.919294, 5.635393, 5.428043, 5.270162, 5.146034, 5.045935, 4.963534, 4.894539, 4.835934, 4.785545, 4.741763, 4.703370, 4.669433, 4.639220, 4.545569, 4.454915, 4.367157, 4.282198, 4.199944, 4.120303),
        4: (22.293746, 12.169527, 9.172941, 7.804156, 7.033262, 6.542441, 6.203835, 5.956682, 5.768591, 5.620779, 5.501626, 5.403576, 5.321501, 5.251807, 5.191898, 5.139856, 5.094231, 5.053908, 5.018016, 4.906804, 4.799216, 4.695134, 4.594443, 4.497034, 4.402801),
        5: (24.717186, 13.324309, 9.958292, 8.421491, 7.556039, 7.004993, 6.624813, 6.347299, 6.136093, 5.970110, 5.836308, 5.726202, 5.634036, 5.555773, 5.488500, 5.430062, 5.378830, 5.333553, 5.293253, 5.168387, 5.047605, 4.930778, 4.817782, 4.708500, 4.602821),
        6: (26.629041, 14.240705, 10.583190, 8.913107, 7.972278, 7.373012, 6.959423, 6.657430, 6.427536, 6.246827, 6.101128, 5.981214, 5.880825, 5.795572, 5.722283, 5.658614, 5.602793, 5.553457, 5.509542, 5.373466, 5.241826, 5.114488, 4.991324, 4.872215, 4.757047),
        7: (28.200561, 14.997775, 11.100851, 9.320882, 8.317674, 7.678367, 7.236949, 6.914511, 6.668970, 6.475906, 6.320208, 6.192036, 6.084715, 5.993560, 5.915187, 5.847092, 5.787385, 5.734610, 5.687630, 5.542033, 5.401152, 5.264848, 5.132995, 5.005471, 4.882166),
        8: (29.530135, 15.641003, 11.541777, 9.668689, 8.612469, 7.939042, 7.473848, 7.133903, 6.874937, 6.671253, 6.506945, 6.371653, 6.258346, 6.162089, 6.079317, 6.007389, 5.944314, 5.888555, 5.838914, 5.685041, 5.536109, 5.391980, 5.252525, 5.117627, 4.987183),
        9: (30.679381, 16.198972, 11.925120, 9.971481, 8.869301, 8.166227, 7.680333, 7.325115, 7.054415, 6.841434, 6.669579, 6.528037, 6.409471, 6.308726, 6.222079, 6.146774, 6.080728, 6.022336, 5.970344, 5.809152, 5.653087, 5.502009, 5.355792, 5.214323, 5.077506),
        10: (31.689352, 16.690809, 12.263703, 10.239256, 9.096604, 8.367376, 7.863188, 7.494451, 7.213349, 6.992115, 6.813550, 6.666447, 6.543194, 6.438447, 6.348343, 6.270021, 6.201319, 6.140571, 6.086476, 5.918725, 5.756255, 5.598926, 5.446615, 5.299214, 5.156635),
    },
}
