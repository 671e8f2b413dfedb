"""Closed-form ingredients of the built-in models.

Generated by tools/derive_builtins.py; do not edit by hand.
Every function maps (state components, parameters, constants) to a tuple
of plain-arithmetic expressions, so it evaluates on floats, numpy arrays
and jax tracers alike.  cov_j functions return the upper triangle of the
standardised covariance coefficient Sigma_j in row-major order.
"""
# fmt: off
# flake8: noqa


def langevin_quad_drift(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (p, -D*q + gamma*p, )


def langevin_quad_diffusion(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (0, sigma, )


def langevin_quad_gen_mu_S_1(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (p, )


def langevin_quad_gen_mu_S_2(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (-D*q + gamma*p, )


def langevin_quad_gen_mu_S_3(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (-D*gamma*q - D*p + gamma**2*p, )


def langevin_quad_gen_mu_R_1(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (-D*q + gamma*p, )


def langevin_quad_gen_mu_R_2(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (-D*gamma*q - D*p + gamma**2*p, )


def langevin_quad_dir_mu_S(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (sigma, )


def langevin_quad_cov_0(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    t0 = sigma**2
    return (t0/3, t0/2, t0, )


def langevin_quad_cov_1(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    t0 = gamma*sigma**2
    return (t0/4, t0/2, t0, )


def langevin_quad_cov_2(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    t0 = sigma**2
    t1 = gamma**2
    t2 = t0*(-4*D + 7*t1)
    return (t2/60, t2/24, t0*(-D + 2*t1)/3, )


def langevin_dw_drift(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (p, D*q + gamma*p - q**3, )


def langevin_dw_diffusion(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (0, sigma, )


def langevin_dw_gen_mu_S_1(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (p, )


def langevin_dw_gen_mu_S_2(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (D*q + gamma*p - q**3, )


def langevin_dw_gen_mu_S_3(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (D*gamma*q + D*p + gamma**2*p - gamma*q**3 - 3*p*q**2, )


def langevin_dw_gen_mu_R_1(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (D*q + gamma*p - q**3, )


def langevin_dw_gen_mu_R_2(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (D*gamma*q + D*p + gamma**2*p - gamma*q**3 - 3*p*q**2, )


def langevin_dw_dir_mu_S(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    return (sigma, )


def langevin_dw_cov_0(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    t0 = sigma**2
    return (t0/3, t0/2, t0, )


def langevin_dw_cov_1(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    t0 = gamma*sigma**2
    return (t0/4, t0/2, t0, )


def langevin_dw_cov_2(x, th, k):
    q, p, = x
    gamma, sigma, = th
    D, = k
    t0 = sigma**2
    t1 = gamma**2
    t2 = q**2
    t3 = t0*(4*D + 7*t1 - 12*t2)
    return (t3/60, t3/24, t0*(D + 2*t1 - 3*t2)/3, )


def qgle_quad_drift(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (p, -D*q + lam*s, -alpha*s - lam*p, )


def qgle_quad_diffusion(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (0, 0, sigma, )


def qgle_quad_gen_mu_S1_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (p, )


def qgle_quad_gen_mu_S1_2(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (-D*q + lam*s, )


def qgle_quad_gen_mu_S1_3(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (-D*p - alpha*lam*s - lam**2*p, )


def qgle_quad_gen_mu_S2_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (-D*q + lam*s, )


def qgle_quad_gen_mu_S2_2(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (-D*p - alpha*lam*s - lam**2*p, )


def qgle_quad_gen_mu_R_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (-alpha*s - lam*p, )


def qgle_quad_dir_mu_S2(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (lam*sigma, )


def qgle_quad_dir_mu_S1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (lam*sigma, )


def qgle_quad_cov_0(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    t0 = sigma**2
    t1 = lam**2*t0
    t2 = lam*t0
    return (t1/20, t1/8, t2/6, t1/3, t2/2, t0, )


def qgle_quad_cov_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    t0 = alpha*sigma**2
    t1 = lam**2*t0
    t2 = lam*t0
    return (-t1/36, -t1/12, -t2/6, -t1/4, -t2/2, -t0, )


def qgle_dw_drift(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (p, D*q + lam*s - q**3, -alpha*s - lam*p, )


def qgle_dw_diffusion(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (0, 0, sigma, )


def qgle_dw_gen_mu_S1_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (p, )


def qgle_dw_gen_mu_S1_2(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (D*q + lam*s - q**3, )


def qgle_dw_gen_mu_S1_3(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (D*p - alpha*lam*s - lam**2*p - 3*p*q**2, )


def qgle_dw_gen_mu_S2_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (D*q + lam*s - q**3, )


def qgle_dw_gen_mu_S2_2(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (D*p - alpha*lam*s - lam**2*p - 3*p*q**2, )


def qgle_dw_gen_mu_R_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (-alpha*s - lam*p, )


def qgle_dw_dir_mu_S2(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (lam*sigma, )


def qgle_dw_dir_mu_S1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    return (lam*sigma, )


def qgle_dw_cov_0(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    t0 = sigma**2
    t1 = lam**2*t0
    t2 = lam*t0
    return (t1/20, t1/8, t2/6, t1/3, t2/2, t0, )


def qgle_dw_cov_1(x, th, k):
    q, p, s, = x
    D, lam, alpha, sigma, = th
    t0 = alpha*sigma**2
    t1 = lam**2*t0
    t2 = lam*t0
    return (-t1/36, -t1/12, -t2/6, -t1/4, -t2/2, -t0, )


def fhn_drift(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    return ((-s_c - x**3 + x - y)/eps, alpha + gamma*x - y, )


def fhn_diffusion(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    return (0, sigma, )


def fhn_gen_mu_S_1(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    return ((-s_c - x**3 + x - y)/eps, )


def fhn_gen_mu_S_2(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    t0 = 1/eps
    t1 = x**2
    return (t0*(-alpha - gamma*x + 3*s_c*t0*t1 - s_c*t0 + 3*t0*t1*y + 3*t0*x**5 - 4*t0*x**3 + t0*x - t0*y + y), )


def fhn_gen_mu_S_3(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    t0 = 1/eps
    t1 = eps**(-2)
    t2 = s_c*t1
    t3 = t1*y
    t4 = x**3
    t5 = t1*x
    t6 = x**2
    t7 = 21*x**4
    t8 = 6*t5
    return (t0*(3*alpha*t0*t6 - alpha*t0 + alpha + gamma*s_c*t0 + 4*gamma*t0*t4 - 2*gamma*t0*x + gamma*t0*y + gamma*x - s_c**2*t8 + 18*s_c*t1*t6 - 12*s_c*t5*y - 3*t0*t6*y + t0*y - 13*t1*t4 + 18*t1*t6*y - 15*t1*x**7 + 27*t1*x**5 + t1*x - t2*t7 - t2 - t3*t7 - t3 - t8*y**2 - y), )


def fhn_gen_mu_R_1(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    return (alpha + gamma*x - y, )


def fhn_gen_mu_R_2(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    t0 = 1/eps
    t1 = gamma*t0
    return (-alpha + gamma*t0*x - gamma*x - s_c*t1 - t1*x**3 - t1*y + y, )


def fhn_dir_mu_S(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    return (-sigma/eps, )


def fhn_cov_0(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    t0 = sigma**2
    return (t0/(3*eps**2), -t0/(2*eps), t0, )


def fhn_cov_1(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    t0 = sigma**2
    t1 = 3*x**2 - 1
    return (t0*(-eps - t1)/(4*eps**3), t0*(3*eps + t1)/(6*eps**2), -t0, )


def fhn_cov_2(x, th, k):
    x, y, = x
    eps, gamma, alpha, sigma, = th
    s_c, = k
    t0 = sigma**2
    t1 = 66*x
    t2 = 7*eps**2
    t3 = x**2
    t4 = x**4
    t5 = 2*eps
    t6 = 18*x
    return (t0*(s_c*t1 + t1*y + t2 - 108*t3 + 129*t4 + t5*(-2*gamma + 15*t3 - 5) + 7)/(60*eps**4), t0*(4*eps*(gamma - 3*t3 + 1) - s_c*t6 - t2 + 24*t3 - 27*t4 - t6*y - 1)/(24*eps**3), t0*(-gamma + t5)/(3*eps), )

