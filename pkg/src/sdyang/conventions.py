"""Fixed sign conventions.  Every choice that the formulas leave open lives here.

ORIENTATION
    Volume form eps_{z w zt wt} = ORIENTATION * det(H).  The value -1 makes
    the fundamental form anti-self-dual (*kappa = -kappa); it corresponds to
    the real orientation -dx1^dx2^dx3^dx4.

K_SIGN
    Potential from a K-matrix: s * star(A) = K_SIGN * (d_z K, d_w K), i.e. on
    flat space A_zt = -K_SIGN d_w K and A_wt = K_SIGN d_z K.

BACKLUND_SIGN, BACKLUND_MIRROR_SIGN
    Overall signs of the primitive systems d B' = R and d~ B~' = R~.  Fixed by
    the flat worked example B~ = zt^2 wt  ->  B' = z zt^2 - 2 w zt wt and by
    requiring the transformed matrix to solve the Yang equation.

HEAVENLY_SIGN
    Coefficient of the Hessian determinant in the second heavenly residual
    Theta_zzt + Theta_wwt + HEAVENLY_SIGN (Theta_zz Theta_ww - Theta_zw^2).
"""

ORIENTATION = -1.0
K_SIGN = 1.0
BACKLUND_SIGN = 1.0
BACKLUND_MIRROR_SIGN = -1.0
HEAVENLY_SIGN = 1.0
