//! Desk-scale run configurations for the reference figures. Each preset lists
//! the original parameters next to the scaled ones in its header comment.

use qwalk_core::spectral::grover2d_eigenvectors_near_origin;

use crate::config::{CoinField, DiaboloConfig, DiaboloMode, DispersionConfig, EnvelopeName, OutputConfig, PacketConfig, RunConfig};

pub struct Preset {
    pub name: &'static str,
    /// Subcommand the preset is meant for.
    pub command: &'static str,
    pub note: &'static str,
    pub build: fn() -> RunConfig,
}

fn base(dim: usize, side: usize, steps: u64, stride: u64) -> RunConfig {
    RunConfig {
        coin: "grover".into(),
        dim,
        shape: vec![side; dim],
        backend: "spectral".into(),
        steps,
        stride,
        threads: None,
        outputs: OutputConfig::default(),
        packet: None,
        dispersion: None,
        diabolo: None,
        project: None,
    }
}

fn gaussian(sigma: f64, k0: Vec<f64>, coin: CoinField) -> Option<PacketConfig> {
    Some(PacketConfig {
        envelope: EnvelopeName::Gaussian,
        sigma,
        sigma0: None,
        k0,
        coin,
        center: None,
    })
}

fn two_gauss_no_dist() -> RunConfig {
    RunConfig {
        packet: gaussian(10.0, vec![0.5, 0.5], CoinField::Named("branch:1,2".into())),
        ..base(2, 256, 160, 40)
    }
}

fn two_gauss_with_dist() -> RunConfig {
    RunConfig {
        packet: gaussian(30.0, vec![0.01, 0.01], CoinField::Named("branch:1,2".into())),
        ..base(2, 1024, 300, 100)
    }
}

fn fig_saddle() -> RunConfig {
    let mut packet = gaussian(24.0, vec![0.0, 1.0], CoinField::Named("branch:2".into())).unwrap();
    packet.envelope = EnvelopeName::GaussianSinc;
    packet.sigma0 = Some(8.0);
    RunConfig {
        packet: Some(packet),
        ..base(2, 768, 1500, 500)
    }
}

fn vaso() -> RunConfig {
    RunConfig {
        packet: gaussian(20.0, vec![0.0, 0.0], CoinField::Named("phi_D".into())),
        outputs: OutputConfig {
            radial_cuts: true,
            ..OutputConfig::default()
        },
        diabolo: Some(DiaboloConfig {
            sigma: 20.0,
            t: 200,
            mode: DiaboloMode::Full,
            xi_min: -4.0,
            xi_max: 3.0,
            xi_step: 0.01,
            lattice_side: Some(512),
        }),
        ..base(2, 512, 200, 100)
    }
}

/// `phi^(2)(theta = pi/2)` of the conical point.
pub fn phi2_half_pi() -> Vec<[f64; 2]> {
    grover2d_eigenvectors_near_origin(std::f64::consts::FRAC_PI_2)[1]
        .iter()
        .map(|z| [z.re, z.im])
        .collect()
}

fn diab_phi2() -> RunConfig {
    RunConfig {
        packet: gaussian(10.0, vec![0.0, 0.0], CoinField::Explicit(phi2_half_pi())),
        ..base(2, 256, 100, 50)
    }
}

fn velocity_3d() -> RunConfig {
    RunConfig {
        packet: gaussian(6.0, vec![0.1, 0.2, 0.3], CoinField::Named("branch:3".into())),
        dispersion: Some(DispersionConfig {
            resolution: 64,
            model: "auto".into(),
            tolerance: qwalk_core::spectral::degeneracy::DEFAULT_TOL,
            degeneracies: false,
            slices: Some(vec![0.0, 0.5, 1.0]),
            velocity_branch: Some(3),
        }),
        ..base(3, 96, 40, 20)
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "2gaussnodist",
        command: "evolve",
        note: "full size sigma=50, t=400 and 800; scaled to sigma=10, t=160 on 256^2 (peaks at +-(80,80))",
        build: two_gauss_no_dist,
    },
    Preset {
        name: "2gausswithdist",
        command: "evolve",
        note: "full size sigma=50, t=400 and 800; scaled to sigma=30, t=300 on 1024^2 (transverse width grows about 5x)",
        build: two_gauss_with_dist,
    },
    Preset {
        name: "figsaddle",
        command: "evolve",
        note: "full size sigma0=15, t=9000; scaled to sigma0=8, sigma=24, t=1500 on 768^2 (branch 2 carries the saddle vector)",
        build: fig_saddle,
    },
    Preset {
        name: "vaso",
        command: "diabolo",
        note: "full size sigma=50, t=400; scaled to sigma=20, t=200 on 512^2 (ct/sigma about 7); also runs with evolve",
        build: vaso,
    },
    Preset {
        name: "diabphi2pis2",
        command: "evolve",
        note: "full size t=200; scaled to sigma=10, t=100 on 256^2 with coin phi^(2)(theta=pi/2)",
        build: diab_phi2,
    },
    Preset {
        name: "velocity3d",
        command: "evolve",
        note: "3D group velocity of branch 3 at k0=(0.1,0.2,0.3)pi: sigma=6, t=40 on 96^3; dispersion slices at k3 = 0, pi/2, pi",
        build: velocity_3d,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

impl Preset {
    pub fn render(&self) -> String {
        format!(
            "# preset {} (qwalk {})\n# {}\n{}",
            self.name,
            self.command,
            self.note,
            (self.build)().to_toml()
        )
    }
}
