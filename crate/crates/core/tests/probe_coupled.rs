use dressed_qed::coupled::{effective_coupled, joint_static_hamiltonian, Model};
use dressed_qed::device::{drive_constants, DeviceParams};
use dressed_qed::operator::{eigh_assigned, kron, BasisLabel, Operator};
use dressed_qed::transmon::{effective_transmon, transmon_ladder_elements};

#[test]
#[ignore]
fn probe_c3_c7c_c8() {
    let p = DeviceParams::new(28.6, 0.149, 4.334, 0.245);
    // criterion 3: Full(0) vs brute force
    let d0 = drive_constants(&p, 5.89, 0.0).unwrap();
    let full0 = effective_coupled(&p, &d0, Model::Full).unwrap();
    let h = joint_static_hamiltonian(&p).unwrap();
    let lad = transmon_ladder_elements(&p).unwrap();
    let i_r = Operator::identity(p.dim_r, BasisLabel::ResonatorFock);
    let reference = kron(&Operator::new(lad.basis.clone(), BasisLabel::TransmonFock), &i_r);
    let eig = eigh_assigned(&h, Some(reference.matrix())).unwrap();
    let by = eig.values_by_bare();
    let idx = |q: usize, r: usize| q * p.dim_r + r;
    let e = |q: usize, r: usize| by[idx(q, r)] - by[idx(0, 0)];
    println!("C3 Full0-vs-brute: dwq0={:+.3e} dwr0={:+.3e} dchi={:+.3e} GHz",
        full0.omega_q0 - e(1,0), full0.omega_r0 - e(0,1),
        full0.chi_qr - (e(1,0) - (e(1,1)-e(0,1))));

    // criterion 7c: K1-vs-Full lamb gaps
    for (omega_d, amp) in [(10.0, 2.3f64), (5.89, 0.19)] {
        let dz = drive_constants(&p, omega_d, 0.0).unwrap();
        let base = effective_coupled(&p, &dz, Model::Full).unwrap();
        let kq0 = effective_transmon(&p, &dz).unwrap();
        let l0 = base.omega_q0 - kq0.omega_q_tilde;
        let d = drive_constants(&p, omega_d, amp).unwrap();
        let full = effective_coupled(&p, &d, Model::Full).unwrap();
        let k1 = effective_coupled(&p, &d, Model::K1).unwrap();
        let kq = effective_transmon(&p, &d).unwrap();
        let fl = (full.omega_q0 - kq.omega_q_tilde) / l0;
        let k1l = (k1.omega_q0 - kq.omega_q_tilde) / l0;
        println!("C7c omega_d={omega_d}: stark={:+.1} MHz lamb full={fl:.4} k1={k1l:.4} gap={:.4}",
            (full.omega_q0-base.omega_q0)*1e3, (fl-k1l).abs());
    }

    // criterion 8: truncation moves over the grid
    let p_lo = p.with_dims(10, 3);
    let p_hi = p.with_dims(14, 5);
    for (omega_d, amp) in [(3.3, 2.2f64), (5.89, 0.19), (6.5, 0.55), (10.0, 2.3)] {
        let d_lo = drive_constants(&p_lo, omega_d, amp).unwrap();
        let d_hi = drive_constants(&p_hi, omega_d, amp).unwrap();
        let a = effective_coupled(&p_lo, &d_lo, Model::Full).unwrap();
        let b = effective_coupled(&p_hi, &d_hi, Model::Full).unwrap();
        println!("C8 omega_d={omega_d} amp={amp}: dwq0={:+.2} kHz dwr0={:+.2} kHz dchiqr={:+.2} kHz dchiq0={:+.2} kHz",
            (a.omega_q0-b.omega_q0)*1e6, (a.omega_r0-b.omega_r0)*1e6,
            (a.chi_qr-b.chi_qr)*1e6, (a.chi_q0-b.chi_q0)*1e6);
    }
}
